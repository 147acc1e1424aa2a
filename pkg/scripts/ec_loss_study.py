"""Residual gyro packet loss after XOR erasure decoding, per window and channel.

    python scripts/ec_loss_study.py --packets 100000
"""

import argparse

import numpy as np

from imucal import ec_codec as ec


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--packets", type=int, default=100_000)
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)

    rng = np.random.default_rng(args.seed)
    payloads = [bytes(b) for b in rng.integers(0, 256, (args.packets, 6), dtype=np.uint8)]
    channels = ["iid:0.01", "iid:0.05", "iid:0.1", "burst:3:0.01", "burst:8:0.01"]
    print(f"{'channel':>14} " + " ".join(f"{'M=' + str(m):>10}" for m in (1, 2, 4, 8)) + "   (residual loss %)")
    for channel in channels:
        model = ec.LossModel.parse(channel)
        cells = []
        for m in (1, 2, 4, 8):
            rx = ec.channel_simulate(ec.encode_stream(payloads, m), model, args.seed)
            _, missing = ec.decode_stream(rx, m, args.packets)
            cells.append(100 * len(missing) / args.packets)
        raw = 100 * (1 - len(rx) / args.packets)
        print(f"{channel:>14} " + " ".join(f"{c:>10.4f}" for c in cells) + f"   raw {raw:.3f} %")


if __name__ == "__main__":
    main()
