"""Command-line entry point: ``imucal <subcommand> ...``."""

from __future__ import annotations

import argparse
import io
import sys
from pathlib import Path

from . import ec_codec, synth
from .calibration import calibrate, calibrate_accel, default_accel_init
from .config import load_config
from .errors import ImucalError
from .evaluation import truncation_sweep
from .model import correct_accel, correct_gyro, load_params, save_params
from .static_detector import baseline_variance, extract_segments, select_threshold
from .stream import SampleStream, read_stream, write_stream

USAGE_EXIT = 2


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _read_input(path: str) -> str:
    return sys.stdin.read() if path == "-" else Path(path).read_text()


def _stream_text(stream: SampleStream) -> str:
    buf = io.StringIO()
    write_stream(stream, buf)
    return buf.getvalue()


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(args) -> int:
    kwargs = {}
    if args.accel_noise is not None:
        kwargs["accel_noise"] = args.accel_noise
    if args.gyro_noise is not None:
        kwargs["gyro_noise"] = args.gyro_noise
    truth = synth.example_truth(**kwargs)
    if args.truth:
        truth = synth.GroundTruth(load_params(args.truth), **kwargs)
    if args.noiseless:
        truth = truth.noiseless()
    stream = synth.make_protocol_sequence(
        args.n,
        truth,
        seed=args.seed,
        hold=args.hold,
        initial_hold=args.initial_hold,
        transition=args.transition,
        perturbation=synth.Perturbation() if args.perturb else None,
    )
    if args.truth_out:
        save_params(truth.params, args.truth_out)
    _emit(_stream_text(stream), args.out)
    return 0


def cmd_calibrate(args) -> int:
    cfg = load_config(args.config)
    source = args.accel_source or cfg.accel_source
    stream = read_stream(args.input)
    result = calibrate(stream, cfg.detector, cfg.solver, source)
    if args.out:
        save_params(result.params, args.out)
    s = result.summary()
    lines = [
        f"segments_used {s['segments_used']}",
        f"k_selected {s['k_selected']}",
        f"accel_residual {s['accel_residual']:.6e}",
        f"gyro_residual {s['gyro_residual']:.6e}",
        f"optimized_parameters {s['optimized_parameters']}",
        "converged " + " ".join(f"{k}={'yes' if v else 'no'}" for k, v in sorted(s["converged"].items())),
    ]
    sys.stdout.write("\n".join(lines) + "\n")
    return 0


def cmd_apply(args) -> int:
    cfg = load_config(args.config)
    source = args.accel_source or cfg.accel_source
    stream = read_stream(args.input)
    params = load_params(args.params)
    accel, accel2 = stream.accel, stream.accel2
    if source == "primary":
        accel = correct_accel(accel, params.accel)
    else:
        accel2 = correct_accel(stream.accel_for("secondary"), params.accel)
    out = SampleStream(stream.packet_index, stream.t, accel, correct_gyro(stream.gyro, params.gyro),
                       stream.sample_rate, accel2=accel2, units=stream.units)
    _emit(_stream_text(out), args.out)
    return 0


def cmd_detect_static(args) -> int:
    cfg = load_config(args.config)
    source = args.accel_source or cfg.accel_source
    stream = read_stream(args.input)
    if args.k is not None:
        base = baseline_variance(stream, cfg.detector, source)
        segments = extract_segments(stream, args.k, base, cfg.detector, accel_source=source)
        k = args.k
    else:
        init = default_accel_init(cfg.solver)
        sel = select_threshold(stream, cfg.detector,
                               lambda segs: calibrate_accel(segs, init, cfg.solver)[1], source)
        segments, k = sel.segments, sel.k
    lines = ["start,end,duration,mean_ax,mean_ay,mean_az"]
    for s in segments:
        lines.append(f"{s.start},{s.end},{s.duration:.6f}," + ",".join(f"{v:.9g}" for v in s.mean_accel))
    _emit("\n".join(lines) + "\n", args.out)
    sys.stderr.write(f"k={k} segments={len(segments)}\n")
    return 0


def cmd_evaluate(args) -> int:
    cfg = load_config(args.config)
    source = args.accel_source or cfg.accel_source
    n_values = [int(v) for v in args.n_values.split(",") if v.strip()]
    if args.inputs:
        sequences = [read_stream(p) for p in args.inputs]
    elif args.synthetic:
        truth = synth.GroundTruth(load_params(args.truth)) if args.truth else synth.example_truth()
        sequences = [synth.make_protocol_sequence(args.n, truth, seed=args.seed + i) for i in range(args.synthetic)]
    else:
        raise _Usage("evaluate needs input files or --synthetic RUNS")
    report = truncation_sweep(sequences, n_values, cfg.detector, cfg.solver, source)
    _emit(report.to_csv(), args.out)
    if args.json:
        Path(args.json).write_text(report.to_json())
    if args.out:
        for n, means in report.aggregate().items():
            cells = " ".join(f"{k}={v:.6g}" for k, v in means.items())
            sys.stdout.write(f"n_eff={n} {cells}\n")
    return 0


def cmd_ec_encode(args) -> int:
    stream = read_stream(args.input)
    payloads = [ec_codec.gyro_to_payload(g, args.lsb) for g in stream.gyro]
    packets = ec_codec.encode_stream(payloads, args.window)
    _emit(ec_codec.packets_to_csv(packets), args.out)
    return 0


def cmd_ec_channel(args) -> int:
    packets = ec_codec.packets_from_csv(_read_input(args.input))
    received = ec_codec.channel_simulate(packets, ec_codec.LossModel.parse(args.loss), args.seed)
    _emit(ec_codec.packets_to_csv(received), args.out)
    sys.stderr.write(f"sent={len(packets)} received={len(received)}\n")
    return 0


def cmd_ec_decode(args) -> int:
    received = ec_codec.packets_from_csv(_read_input(args.input))
    payloads, lost = ec_codec.decode_stream(received, args.window, args.count)
    _emit(ec_codec.payloads_to_csv(payloads), args.out)
    recovered = len(payloads) - len(received)
    sys.stderr.write(f"recovered={recovered} unrecovered={len(lost)}\n")
    return 0


# -- parser --------------------------------------------------------------------


class _Usage(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _Usage(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="imucal", description="Multi-position IMU calibration toolkit.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(sp):
        sp.add_argument("--config", help="run configuration file (default: $IMUCAL_CONFIG)")
        sp.add_argument("--accel-source", choices=("primary", "secondary"))

    sp = sub.add_parser("simulate", help="write a synthetic calibration sequence")
    sp.add_argument("--n", type=int, default=37, help="number of poses")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--truth", help="ground-truth parameter file (default: built-in example device)")
    sp.add_argument("--truth-out", help="write the ground truth used")
    sp.add_argument("--hold", type=float, default=3.0)
    sp.add_argument("--initial-hold", type=float, default=40.0)
    sp.add_argument("--transition", type=float, default=1.5)
    sp.add_argument("--accel-noise", type=float, help="primary accelerometer noise, m/s^2 rms")
    sp.add_argument("--gyro-noise", type=float, help="gyro noise, rad/s rms")
    sp.add_argument("--noiseless", action="store_true")
    sp.add_argument("--perturb", action="store_true", help="add small vibration to the short holds")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("calibrate", help="estimate calibration parameters from a stream")
    sp.add_argument("input")
    with_config(sp)
    sp.add_argument("--out", help="parameter file (.json for JSON, otherwise key = value text)")
    sp.set_defaults(func=cmd_calibrate)

    sp = sub.add_parser("apply", help="correct a raw stream with a parameter file")
    sp.add_argument("input")
    sp.add_argument("--params", required=True)
    with_config(sp)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_apply)

    sp = sub.add_parser("detect-static", help="list static segments as CSV")
    sp.add_argument("input")
    with_config(sp)
    sp.add_argument("--k", type=int, help="fixed threshold multiplier (default: automatic selection)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_detect_static)

    sp = sub.add_parser("evaluate", help="orientation-count truncation study")
    sp.add_argument("inputs", nargs="*")
    with_config(sp)
    sp.add_argument("--n-values", default="9,12,20,37")
    sp.add_argument("--synthetic", type=int, metavar="RUNS", help="simulate RUNS sequences instead of reading files")
    sp.add_argument("--n", type=int, default=37, help="poses per synthetic sequence")
    sp.add_argument("--truth")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out", help="CSV report (default: stdout)")
    sp.add_argument("--json", help="also write the report as JSON")
    sp.set_defaults(func=cmd_evaluate)

    sp = sub.add_parser("ec-encode", help="wrap gyro samples into erasure-coded packets")
    sp.add_argument("input")
    sp.add_argument("--window", type=int, default=ec_codec.DEFAULT_WINDOW)
    sp.add_argument("--lsb", type=float, default=ec_codec.GYRO_LSB_PER_RAD_S, help="LSB per rad/s")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ec_encode)

    sp = sub.add_parser("ec-channel", help="drop packets through a simulated lossy link")
    sp.add_argument("input")
    sp.add_argument("--loss", required=True, help="iid:P or burst:LEN:P")
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ec_channel)

    sp = sub.add_parser("ec-decode", help="recover lost gyro payloads")
    sp.add_argument("input")
    sp.add_argument("--window", type=int, default=ec_codec.DEFAULT_WINDOW)
    sp.add_argument("--count", type=int, help="number of packets sent (to report trailing losses)")
    sp.add_argument("--out")
    sp.set_defaults(func=cmd_ec_decode)
    return p


def run_cli(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except _Usage as exc:
        sys.stderr.write(f"error: usage: {exc}\n")
        return USAGE_EXIT
    except ImucalError as exc:
        sys.stderr.write(f"error: {exc.describe()}\n")
        return exc.exit_code
    except (ValueError, OSError) as exc:
        sys.stderr.write(f"error: bad-input: {exc}\n")
        return 3


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
