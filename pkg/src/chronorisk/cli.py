"""Command-line entry point: gen / train / eval / explain / gradcheck / serve.

Exit codes: 0 success, 1 usage error, 2 unreadable or invalid input data,
3 failure while training, predicting, or serving. Every non-zero exit
writes a diagnostic to stderr. Cohort files are never modified.
"""

import argparse
import dataclasses
import json
import sys

import numpy as np

from .errors import (
    CohortFormatError,
    ConfigurationError,
    InvalidInputError,
    NotFoundError,
    ReferentialError,
    VersionError,
)
from .evaluate import ABLATIONS, evaluate, report_table, write_csv
from .explain import TARGETS, explain_record
from .model import (
    Hyperparams,
    Model,
    NormStats,
    TrainConfig,
    grad_check,
    init_params,
    load_model,
    save_model,
    train,
)
from .records import Demographics, DiseaseLabels, LabPanel, PatientRecord
from .synth import CohortConfig, generate_cohort, read_cohort, write_cohort
from .vocab import EMPTY_TOKEN, UNK_TOKEN, Vocabulary

_DATA_ERRORS = (
    OSError,                 # missing files, permissions, corrupt stores
    CohortFormatError,
    VersionError,
    NotFoundError,
    ReferentialError,
    ConfigurationError,
    InvalidInputError,
)


class _Parser(argparse.ArgumentParser):
    """argparse exits 2 on usage errors; the contract here is exit 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="chronorisk",
                     description="Chronic-disease risk platform tools.")
    sub = parser.add_subparsers(dest="command", required=True,
                                parser_class=_Parser)

    gen = sub.add_parser("gen", help="generate a synthetic cohort file")
    gen.add_argument("--config", required=True,
                     help='"default" or a JSON file of generator settings')
    gen.add_argument("--out", required=True, help="cohort JSONL path")
    gen.add_argument("--n", type=int, help="override patient count")
    gen.add_argument("--seed", type=int, help="override generator seed")
    gen.add_argument("--signal", type=float, help="override signal strength")
    gen.set_defaults(func=cmd_gen)

    tr = sub.add_parser("train", help="train a model on a cohort")
    tr.add_argument("--cohort", required=True)
    tr.add_argument("--out", required=True, help="checkpoint path")
    tr.add_argument("--seed", type=int, required=True)
    tr.add_argument("--epochs", type=int, default=TrainConfig.epochs)
    tr.add_argument("--lr", type=float, default=TrainConfig.learning_rate)
    tr.add_argument("--batch", type=int, default=TrainConfig.batch_size)
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="evaluate a checkpoint on a cohort")
    ev.add_argument("--cohort", required=True)
    ev.add_argument("--ckpt", required=True)
    ev.add_argument("--ablation", choices=ABLATIONS + ("all",), default="all")
    ev.add_argument("--threshold", type=float, default=0.5)
    ev.add_argument("--csv", help="also write metrics as CSV")
    ev.set_defaults(func=cmd_eval)

    ex = sub.add_parser("explain", help="attribute one patient's risk")
    ex.add_argument("--ckpt", required=True)
    ex.add_argument("--cohort", required=True)
    ex.add_argument("--patient", required=True)
    ex.add_argument("--target", choices=TARGETS, default="diabetes")
    ex.add_argument("--mode", choices=("auto", "exact", "sampled"),
                    default="auto")
    ex.add_argument("--permutations", type=int, default=2000)
    ex.add_argument("--seed", type=int, default=0)
    ex.add_argument("--json", action="store_true",
                    help="machine-readable output")
    ex.set_defaults(func=cmd_explain)

    gc = sub.add_parser("gradcheck",
                        help="finite-difference check of the backward pass")
    gc.add_argument("--seed", type=int, default=0)
    gc.add_argument("--tolerance", type=float, default=1e-4)
    gc.set_defaults(func=cmd_gradcheck)

    sv = sub.add_parser("serve", help="run the HTTP service")
    sv.add_argument("--config", help="key=value config file")
    sv.set_defaults(func=cmd_serve)

    return parser


def _read_gen_config(path: str) -> CohortConfig:
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigurationError(f"{path}: invalid JSON ({exc})") from exc
    try:
        return CohortConfig.from_dict(doc)
    except ConfigurationError:
        raise
    except (KeyError, TypeError, AttributeError, ValueError) as exc:
        raise ConfigurationError(f"{path}: not a generator config ({exc})") from exc


def cmd_gen(args) -> int:
    if args.config == "default":
        config = CohortConfig()
    else:
        config = _read_gen_config(args.config)
    overrides = {}
    if args.n is not None:
        overrides["n_patients"] = args.n
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.signal is not None:
        overrides["signal_strength"] = args.signal
    if overrides:
        config = dataclasses.replace(config, **overrides)
    cohort = generate_cohort(config)
    write_cohort(cohort, args.out)
    rates = {d: sum(r.labels.as_dict()[d] for r in cohort.records)
             / len(cohort) for d in sorted(config.prevalence)}
    print(f"wrote {len(cohort)} patients to {args.out}")
    print("label rates: " + ", ".join(f"{d} {r:.3f}"
                                      for d, r in rates.items()))
    return 0


def cmd_train(args) -> int:
    cohort = read_cohort(args.cohort)
    config = TrainConfig(epochs=args.epochs, learning_rate=args.lr,
                         batch_size=args.batch)
    model, log = train(cohort.records, config, seed=args.seed)
    digest = save_model(model, args.out)
    print(f"trained on {log.n_train} records ({log.n_val} held out) "
          f"for {len(log.epochs)} epochs in {log.wall_seconds:.1f}s")
    if log.epochs:
        last = log.epochs[-1]
        val = f", val loss {last.val_loss:.4f}" if last.val_loss is not None \
            else ""
        print(f"final train loss {last.train_loss:.4f}{val}")
    print(f"saved checkpoint {args.out} (sha256 {digest})")
    return 0


def cmd_eval(args) -> int:
    cohort = read_cohort(args.cohort)
    model = load_model(args.ckpt)
    ablations = ABLATIONS if args.ablation == "all" else (args.ablation,)
    reports = [evaluate(model, cohort.records, threshold=args.threshold,
                        ablation=a) for a in ablations]
    print(report_table(reports))
    if args.csv:
        write_csv(reports, args.csv)
        print(f"wrote metrics to {args.csv}")
    return 0


def cmd_explain(args) -> int:
    model = load_model(args.ckpt)
    cohort = read_cohort(args.cohort)
    record = next((r for r in cohort.records
                   if r.patient_id == args.patient), None)
    if record is None:
        raise NotFoundError(
            f"patient {args.patient} is not in {args.cohort}")
    explanation = explain_record(model, record, args.target, mode=args.mode,
                                 n_permutations=args.permutations,
                                 seed=args.seed)
    if args.json:
        print(json.dumps(explanation.to_json_dict(), indent=2))
        return 0
    mode = explanation.mode
    if explanation.n_permutations is not None:
        mode += f" ({explanation.n_permutations} permutations)"
    print(f"patient {args.patient}  target {explanation.target}  mode {mode}")
    print(f"prediction {explanation.prediction:.4f}  "
          f"baseline {explanation.baseline_value:.4f}")
    print(f"{'group':24s} {'kind':12s} {'phi':>9s}")
    for a in explanation.attributions:
        stderr = f"  +/- {a.stderr:.4f}" if a.stderr is not None else ""
        print(f"{a.group.name:24.24s} {a.group.kind:12s} "
              f"{a.phi:+9.4f}{stderr}")
    gap = explanation.prediction - explanation.baseline_value
    print(f"sum(phi) {explanation.phi_total():+.6f}  "
          f"prediction - baseline {gap:+.6f}")
    return 0


def cmd_gradcheck(args) -> int:
    model, record = _gradcheck_fixture(args.seed)
    report = grad_check(model, record, tolerance=args.tolerance)
    print(report.summary())
    if not report.passed:
        print("chronorisk: gradient check failed", file=sys.stderr)
        return 3
    return 0


def cmd_serve(args) -> int:
    from .service import Server, load_config

    config = load_config(args.config)
    server = Server(config)
    loaded = server.app.version or "none (jobs will fail until trained)"
    print(f"serving on http://{config.host}:{server.port}  "
          f"model {loaded}", flush=True)
    server.run()
    return 0


def _gradcheck_fixture(seed: int) -> tuple[Model, PatientRecord]:
    words = ("thirst", "fatigue", "blurred", "vision", "checkup", "and")
    vocab = Vocabulary([EMPTY_TOKEN, UNK_TOKEN] + sorted(words))
    hp = Hyperparams(d=8, n_heads=2, ff_dim=8, lab_hidden=8,
                     n_analytes=4, l_max=8, vocab_size=len(vocab))
    model = Model(
        hyper=hp,
        params=init_params(hp, np.random.default_rng(seed)),
        vocab=vocab,
        norm=NormStats(mean=np.zeros(4), std=np.ones(4),
                       constant=np.zeros(4, dtype=bool), age_mean=50.0),
    )
    record = PatientRecord(
        "GRADCHECK", "thirst and blurred vision",
        LabPanel(np.array([1.0, -0.5, 0.25, 2.0]),
                 np.array([True, True, False, True])),
        Demographics(55, "male"),
        labels=DiseaseLabels(True, False, True), onset_day=120,
    )
    return model, record


def dispatch(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except _DATA_ERRORS as exc:
        print(f"chronorisk: data error: {exc}", file=sys.stderr)
        return 2
    except KeyboardInterrupt:
        return 3
    except Exception as exc:
        print(f"chronorisk: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 3


def main():
    sys.exit(dispatch())


if __name__ == "__main__":
    main()
