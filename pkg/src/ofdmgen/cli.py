"""Command-line interface: generate, transform, evaluate, report, presets.

Failures are reported as a one-line JSON object on stderr with a nonzero
exit code, so callers can machine-parse errors.
"""

from __future__ import annotations

import argparse
import json
import sys

from . import datasets, metrics, report
from .container import ContainerError
from .modem import WaveformSpec


def _spec_from_args(args) -> WaveformSpec:
    if args.preset and args.spec:
        raise ValueError("pass either --preset or --spec, not both")
    if args.preset:
        return datasets.preset_spec(args.preset)
    if args.spec:
        text = args.spec
        if not text.lstrip().startswith("{"):
            with open(text, encoding="utf-8") as fh:
                text = fh.read()
        return WaveformSpec.from_dict(json.loads(text))
    raise ValueError("a spec is required: --preset or --spec")


def _cmd_generate(args) -> int:
    spec = _spec_from_args(args)
    header = datasets.generate_dataset(
        spec, args.count, args.seed, args.out, workers=args.workers
    )
    print(json.dumps({"written": args.out, "count": header["count"],
                      "item_shape": header["item_shape"]}))
    return 0


def _cmd_transform(args) -> int:
    header = datasets.convert_dataset(args.infile, args.out, args.to, args.scaling)
    print(json.dumps({"written": args.out, "representation": header["representation"],
                      "item_shape": header["item_shape"]}))
    return 0


def _cmd_evaluate(args) -> int:
    spec_gen, gen = datasets.load_waveforms(args.gen)
    spec_target, target = datasets.load_waveforms(args.target)
    if spec_gen.to_dict() != spec_target.to_dict():
        raise ValueError("generated and target containers carry different specs")
    rep = metrics.evaluate(gen, target, spec_target, profile_sample=args.profile_sample)
    rep.save(args.out)
    if args.csv_dir:
        report.write_report_csvs(rep, args.csv_dir)
    print(json.dumps(rep.summary()))
    return 0


def _cmd_report(args) -> int:
    rep = metrics.EvalReport.load(args.report)
    files = report.write_report_csvs(rep, args.csv_dir)
    print(json.dumps({"written": files}))
    return 0


def _cmd_presets(_args) -> int:
    for name in datasets.preset_names():
        print(name)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="ofdmgen",
        description="Synthetic OFDM datasets, STFT transforms, and fidelity evaluation",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="generate a raw waveform dataset")
    p.add_argument("--preset", help="named experiment preset")
    p.add_argument("--spec", help="inline JSON spec or path to a spec file")
    p.add_argument("--count", type=int, required=True)
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--out", required=True)
    p.add_argument("--workers", type=int, default=None,
                   help="parallel workers (default: OFDMGEN_WORKERS or 1)")
    p.set_defaults(func=_cmd_generate)

    p = sub.add_parser("transform", help="convert a dataset between raw and stft")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--to", choices=["stft", "raw"], required=True)
    p.add_argument("--scaling", choices=["global", "featurewise"], default=None)
    p.set_defaults(func=_cmd_transform)

    p = sub.add_parser("evaluate", help="run the evaluation suite on two datasets")
    p.add_argument("--gen", required=True)
    p.add_argument("--target", required=True)
    p.add_argument("--out", required=True, help="report JSON output path")
    p.add_argument("--csv-dir", default=None)
    p.add_argument("--profile-sample", type=int, default=1024)
    p.set_defaults(func=_cmd_evaluate)

    p = sub.add_parser("report", help="render CSV tables from a report JSON")
    p.add_argument("--report", required=True)
    p.add_argument("--csv-dir", required=True)
    p.set_defaults(func=_cmd_report)

    p = sub.add_parser("presets", help="list named presets")
    p.set_defaults(func=_cmd_presets)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, ContainerError, OSError, KeyError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
