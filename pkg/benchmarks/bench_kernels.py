"""Time the compiled kernels against the numpy fallback.

    python benchmarks/bench_kernels.py [--repeat N]
"""
import argparse
import timeit

import numpy as np

from toa_lab import _kernels_py
from toa_lab.wavepacket import GaussianPacketSpec, gaussian_packet, make_grid, to_momentum

try:
    from toa_lab import _kernels as compiled
except ImportError:
    compiled = None


def phase_sum_case():
    wf = gaussian_packet(GaussianPacketSpec.reference(), make_grid(-20, 20, 4096))
    spec = to_momentum(wf, 4)
    k = spec.k[spec.k > 0]
    w = spec.amplitudes[spec.k > 0] * np.sqrt(k)
    taus = np.linspace(0, 3, 600)
    return "phase sum (600 x %d)" % k.size, lambda m: m.quadratic_phase_sum(k, w, taus, 1.0)


def rank_one_case():
    rng = np.random.default_rng(0)
    n = 128
    e = 0.5 * (2 * np.pi * np.fft.fftfreq(n, 40 / n)) ** 2
    u = np.exp(-2j * np.pi * np.arange(n) * (n // 2) / n) / np.sqrt(n)
    v = rng.normal(size=n) + 1j * rng.normal(size=n)
    rho = np.outer(v, v.conj()) / np.vdot(v, v).real
    return "rank-one RK4 (n=128, 200 steps)", lambda m: m.rk4_diag_rank1(rho, e, u, 8.0, 1e-3, 200, False)


def main():
    p = argparse.ArgumentParser()
    p.add_argument("--repeat", type=int, default=5)
    args = p.parse_args()
    backends = [("python", _kernels_py)] + ([("cython", compiled)] if compiled else [])
    print(f"{'kernel':36s} " + " ".join(f"{name:>10s}" for name, _ in backends) + "    speedup")
    for label, call in (phase_sum_case(), rank_one_case()):
        times = [min(timeit.repeat(lambda: call(mod), number=1, repeat=args.repeat)) for _, mod in backends]
        speed = f"{times[0] / times[-1]:9.1f}x" if len(times) > 1 else "      n/a"
        print(f"{label:36s} " + " ".join(f"{t * 1e3:8.1f}ms" for t in times) + f"  {speed}")


if __name__ == "__main__":
    main()
