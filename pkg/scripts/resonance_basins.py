"""Where does the forced near-resonant response settle?

Runs the resonant configuration (omega_tilde = 1.0143379, eps = 0.01) from
several initial displacements at rest, and from the consistent slow state of
the resonant branch, and prints the windowed envelope at a few times next
to the three stationary amplitudes predicted at that detuning.
"""
import math

import numpy as np

from duoscale import (IntegratorConfig, NonlinearSpring, build_chain, envelope,
                      first_order_params, initial_state, integrate, modal_decompose,
                      stationary_amplitudes, stationary_solve)

EPS, SIGMA = 0.01, 1.43379
CHECKPOINTS = (100.0, 500.0, 1000.0, 2000.0, 2900.0)


def main():
    system = build_chain(1, 1.0, 0.5, NonlinearSpring(1.0, 1.0, EPS, 1), damping=0.5,
                         forcing=[1.0], detuning=SIGMA)
    basis = modal_decompose(system)
    params = first_order_params(system, basis)
    roots = stationary_amplitudes(params, SIGMA)
    print("stationary amplitudes eps*a:", ", ".join(f"{EPS * a:.5f}" for a in roots))
    upper = stationary_solve(params, SIGMA, roots[-1])
    starts = {f"rest u0={u:g}": ([u], [0.0]) for u in (0.004, 0.019796915, 0.079)}
    starts["consistent (a, beta) upper"] = initial_state(system, basis, upper.a, upper.beta)
    cfg = IntegratorConfig(method="theta", dt=0.01, t_end=3000.0, stride=1)
    print(f"{'start':28s}" + "".join(f"  t={t:<7g}" for t in CHECKPOINTS))
    for label, (u0, v0) in starts.items():
        series = integrate(system, u0, v0, cfg, basis)
        mids, env = envelope(series, 0, 2 * math.pi / params.forcing_frequency)
        picks = [env[int(np.argmin(np.abs(mids - t)))] for t in CHECKPOINTS]
        print(f"{label:28s}" + "".join(f"  {p:.5f}  " for p in picks))


if __name__ == "__main__":
    main()
