"""Simulate one recording of a random device, calibrate it and compare with the truth.

    python scripts/calibrate_demo.py --seed 3 --n 37
"""

import argparse
import time

import numpy as np

from imucal import calibrate, synth
from imucal.model import MILLI_G


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--n", type=int, default=37)
    args = ap.parse_args(argv)

    truth = synth.random_truth(np.random.default_rng(args.seed))
    stream = synth.make_protocol_sequence(args.n, truth, seed=args.seed)
    t0 = time.perf_counter()
    r = calibrate(stream)
    print(f"{len(stream)} samples, {r.segments_used} segments at k={r.k_selected}, "
          f"{time.perf_counter() - t0:.2f} s")

    got, want = r.params, truth.params
    print("accel bias error [mg]     ", np.round((got.accel.bias - want.accel.bias) / MILLI_G, 4))
    print("accel scale error [%]     ", np.round(100 * (got.accel.scale / want.accel.scale - 1), 4))
    print("accel misalignment [deg]  ", np.round(np.degrees(got.accel.misalignment - want.accel.misalignment), 4))
    print("gyro scale error [%]      ", np.round(100 * (got.gyro.scale / want.gyro.scale - 1), 4))
    print("gyro misalignment [deg]   ", np.round(np.degrees(got.gyro.misalignment - want.gyro.misalignment), 4))
    print("gyro bias error [rad/s]   ", np.round(got.gyro.bias - want.gyro.bias, 6))


if __name__ == "__main__":
    main()
