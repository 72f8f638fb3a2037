"""Command-line entry point.

Exit codes: 0 on success, 1 for invalid input or IO failures, 2 for numerical
failures and for ``validate`` runs in which any check fails.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import __version__, analysis, kernels, validation
from .config import config_to_dict, load_config
from .detector import detect, detector_coeffs
from .errors import NumericalError, ValidationError
from .io import file_digest, write_csv, write_manifest, write_svg_plot
from .model import observe, snr_db
from .simulator import HYPOTHESES, power_function, roc_sweep, sensitivity_sweep

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise ValidationError(message)


def _common(p: argparse.ArgumentParser, outputs: bool = False) -> None:
    p.add_argument("--config", help="JSON config file")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override a config key (repeatable); VALUE is parsed as JSON")
    if outputs:
        p.add_argument("--output-dir", help="directory for results (default: output_path)")
        p.add_argument("--svg", action="store_true", help="also write SVG plots")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="onebitdet", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("theory", help="CLT moments and operating point")
    _common(p)
    p.add_argument("--threshold", type=float, help="evaluate at this threshold instead of the prior one")

    p = sub.add_parser("detect", help="run the detector on one bit vector")
    _common(p)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--bits", help="file of +1/-1 values separated by whitespace or commas")
    src.add_argument("--simulate", choices=HYPOTHESES, help="simulate one trial under H0 or H1")
    p.add_argument("--trial", type=int, default=0, help="trial index for --simulate")

    p = sub.add_parser("roc", help="ROC curves across a correlation or SNR grid")
    _common(p, outputs=True)
    p.add_argument("--sweep", choices=("corr", "snr"), default="corr")

    p = sub.add_parser("power", help="p_d at fixed p_fa across the SNR grid")
    _common(p, outputs=True)

    p = sub.add_parser("sensitivity", help="ROC under perturbed detector parameters")
    _common(p, outputs=True)

    p = sub.add_parser("validate", help="run the Monte-Carlo oracle suites")
    _common(p)
    p.add_argument("--scale", type=float, default=1.0,
                   help="multiply every oracle sample count by this factor")
    return parser


def _slug(text: str) -> str:
    text = text.replace("+", "plus").replace("-", "minus").replace("%", "pct")
    return re.sub(r"[^A-Za-z0-9_.]", "_", text)


def _value_tag(v: float) -> str:
    return f"{v:g}"


def _theory_structure(config) -> str:
    return config.theory_structure or config.generation_mode


def _run_id(command: str, args: dict, config: dict) -> str:
    blob = json.dumps({"command": command, "args": args, "config": config, "version": __version__},
                      sort_keys=True)
    return hashlib.sha256(blob.encode("utf-8")).hexdigest()[:16]


def _finish(out_dir: Path, command: str, args: dict, config, outputs: list[Path],
            extra: dict | None = None) -> None:
    doc = config_to_dict(config)
    manifest = {
        "run_id": _run_id(command, args, doc),
        "command": command,
        "arguments": args,
        "config": doc,
        "resolved_params": config.resolved_params().to_dict(),
        "seed": config.seed,
        "generation_mode": config.generation_mode,
        "theory_structure": _theory_structure(config),
        "version": __version__,
        "outputs": {p.name: file_digest(p) for p in outputs},
    }
    if extra:
        manifest.update(extra)
    write_manifest(out_dir / "manifest.json", manifest)


def _out_dir(ns, config) -> Path:
    out = Path(ns.output_dir or config.output_path)
    try:
        out.mkdir(parents=True, exist_ok=True)
    except OSError as exc:
        raise OSError(f"cannot create output directory {out}: {exc.strerror}") from None
    return out


def _print_json(doc: dict) -> None:
    print(json.dumps(doc, sort_keys=True))


def cmd_theory(ns, config) -> int:
    params = config.resolved_params()
    summary = analysis.theory(params, _theory_structure(config), th=ns.threshold)
    _print_json({
        "mu0": summary.null.mu0, "std0": summary.null.std0,
        "mu1": summary.alt.mu1, "std1": summary.alt.std1,
        "threshold": summary.threshold, "pfa": summary.pfa, "pd": summary.pd,
        "snr_db": snr_db(params), "noise_std": params.noise_std,
        "structure": _theory_structure(config),
    })
    return EXIT_OK


def _read_bits(path: str) -> np.ndarray:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot read {path}: {exc.strerror}") from None
    tokens = [t for t in re.split(r"[\s,]+", text) if t]
    try:
        return np.array([int(t) for t in tokens], dtype=np.int64)
    except ValueError:
        raise ValidationError(f"{path}: bits must be integers +1 or -1") from None


def cmd_detect(ns, config) -> int:
    params = config.resolved_params()
    if ns.bits is not None:
        r = _read_bits(ns.bits)
    else:
        if ns.trial < 0:
            raise ValidationError("--trial must be non-negative")
        h = HYPOTHESES.index(ns.simulate)
        rng = np.random.default_rng(np.random.SeedSequence(config.seed, spawn_key=(h, ns.trial)))
        r = observe(params, ns.simulate, rng, mode=config.generation_mode)
    result = detect(r, params, detector_coeffs(params))
    _print_json({"statistic": result.statistic, "threshold": result.threshold,
                 "decision": result.decision, "agreements": int(np.sum(r[1:] == r[:-1]))})
    return EXIT_OK


def cmd_roc(ns, config) -> int:
    out = _out_dir(ns, config)
    sweep = roc_sweep(config, ns.sweep)
    outputs, auc, curves = [], {}, []
    for value, curve, base in sweep:
        tag = f"{ns.sweep}_{_value_tag(value)}"
        for prefix, c in (("roc", curve), ("roc_baseline", base)):
            path = out / f"{prefix}_{tag}.csv"
            write_csv(c, path)
            outputs.append(path)
        auc[tag] = {"proposed": curve.auc(), "baseline": base.auc()}
        curves.append((curve.label, curve.pfa_emp, curve.pd_emp))
    if ns.svg:
        path = out / f"roc_{ns.sweep}.svg"
        write_svg_plot(curves, path, title=f"ROC across {ns.sweep}", chance_line=True)
        outputs.append(path)
    _finish(out, "roc", {"sweep": ns.sweep, "svg": ns.svg}, config, outputs, {"auc": auc})
    for tag, a in auc.items():
        print(f"{tag}: AUC {a['proposed']:.4f} (agreement-count baseline {a['baseline']:.4f})")
    return EXIT_OK


def cmd_power(ns, config) -> int:
    out = _out_dir(ns, config)
    proposed, baseline = power_function(config)
    outputs = [out / "power.csv", out / "power_baseline.csv"]
    write_csv(proposed, outputs[0])
    write_csv(baseline, outputs[1])
    if ns.svg:
        path = out / "power.svg"
        lo, hi = float(np.min(proposed.snr_db)), float(np.max(proposed.snr_db))
        write_svg_plot([(proposed.label, proposed.snr_db, proposed.pd_emp),
                        (baseline.label, baseline.snr_db, baseline.pd_emp)], path,
                       xlabel="SNR (dB)", ylabel="p_d", title="Power function",
                       xlim=(lo, hi if hi > lo else lo + 1.0))
        outputs.append(path)
    _finish(out, "power", {"svg": ns.svg}, config, outputs)
    for snr, pd in zip(proposed.snr_db, proposed.pd_emp):
        print(f"snr {snr:g} dB: p_d {pd:.4f}")
    return EXIT_OK


def cmd_sensitivity(ns, config) -> int:
    out = _out_dir(ns, config)
    curves = sensitivity_sweep(config)
    outputs = []
    for name, curve in curves.items():
        path = out / f"sensitivity_{_slug(name)}.csv"
        write_csv(curve, path)
        outputs.append(path)
    if ns.svg:
        path = out / "sensitivity.svg"
        write_svg_plot([(n, c.pfa_emp, c.pd_emp) for n, c in curves.items()], path,
                       title="Sensitivity to detector parameters", chance_line=True)
        outputs.append(path)
    _finish(out, "sensitivity", {"svg": ns.svg}, config, outputs,
            {"auc": {name: c.auc() for name, c in curves.items()}})
    for name, curve in curves.items():
        print(f"{name}: AUC {curve.auc():.4f}")
    return EXIT_OK


def cmd_validate(ns, config) -> int:
    if not ns.scale > 0.0:
        raise ValidationError("--scale must be positive")
    results = validation.run_all(config.resolved_params(), scale=ns.scale, seed=config.seed)
    for r in results:
        print(r.line())
    return EXIT_OK if all(r.passed for r in results) else EXIT_NUMERICAL


COMMANDS = {"theory": cmd_theory, "detect": cmd_detect, "roc": cmd_roc, "power": cmd_power,
            "sensitivity": cmd_sensitivity, "validate": cmd_validate}


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        config = load_config(ns.config, ns.overrides)
        return COMMANDS[ns.command](ns, config)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
