"""Command-line driver: synth / filter / analyze / rank / rerun.

Every command writes a manifest (resolved configuration, input digests,
tool version, timestamp) next to its outputs; `rerun <manifest>` replays
the command and reproduces the outputs byte-for-byte, timestamp aside.

Exit codes: 0 success, 2 usage or configuration error, 1 runtime failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, analysis, filter_engine, synthgen
from .dataset import (
    DatasetFormatError,
    read_dataset,
    read_predictions,
    write_dataset,
)
from .filter_engine import FilterConfig, read_result, write_result
from .weak_learner import TrainSpec

PRESETS = {
    "mnli": {"m": 64, "t": 50_000, "k": 10_000, "tau": 0.75},
    "snli": {"m": 64, "t": 40_000, "k": 10_000, "tau": 0.75},
    "cosmosqa": {"m": 64, "t": 10_000, "k": 500, "tau": 0.75},
    "socialiqa": {"m": 64, "t": 10_000, "k": 500, "tau": 0.75},
}

REPORT_COLUMNS = ["model", "adversary", "subset", "seed", "metric", "value"]


class ConfigError(Exception):
    pass


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write_manifest(out_dir: Path, command: str, config: dict, inputs: list) -> None:
    config = {k: v for k, v in config.items() if k not in ("func", "command")}
    manifest = {
        "command": command,
        "config": config,
        "inputs": {str(p): _sha256(p) for p in inputs},
        "version": __version__,
        "timestamp": datetime.now(timezone.utc).isoformat(),
    }
    with open(out_dir / f"{command}_manifest.json", "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")


# --- synth ----------------------------------------------------------------

def cmd_synth(args) -> None:
    try:
        spec = synthgen.SynthSpec(
            num_train=args.num_train,
            num_eval=args.num_eval,
            dim=args.dim,
            num_classes=args.num_classes,
            easy_fraction=args.easy_fraction,
            noise_fraction=args.noise_fraction,
            annotator_count=args.annotators,
            annotator_flip_prob_easy=args.flip_easy,
            annotator_flip_prob_hard=args.flip_hard,
            adversary_strength=args.adversary_strength,
            signal_scale=args.signal_scale,
            seed=args.seed,
        )
    except ValueError as e:
        raise ConfigError(str(e))
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    train, eval_ds, gt = synthgen.generate(spec)
    write_dataset(train, out / "train.jsonl")
    write_dataset(eval_ds, out / "eval.jsonl")
    synthgen.write_ground_truth(gt, out / "ground_truth.jsonl")
    _write_manifest(out, "synth", vars(args).copy(), [])
    print(f"wrote {len(train)} train / {len(eval_ds)} eval examples to {out}")


# --- filter ---------------------------------------------------------------

def _resolve_filter_config(args) -> FilterConfig:
    vals = dict(PRESETS[args.preset]) if args.preset else {}
    for name in ("m", "t", "k", "tau"):
        flag = getattr(args, name)
        if flag is not None:
            vals[name] = flag
    missing = [f"--{x}" for x in ("m", "t", "k", "tau") if x not in vals]
    if args.n is None:
        missing.append("--n")
    if missing:
        raise ConfigError(f"missing required value(s): {', '.join(missing)}")
    spec = TrainSpec(
        epochs=args.epochs,
        batch_size=args.batch_size,
        learning_rate=args.learning_rate,
        l2=args.l2,
        standardize=args.standardize,
    )
    try:
        return FilterConfig(
            n=args.n, m=vals["m"], t=vals["t"], k=vals["k"], tau=vals["tau"],
            train_spec=spec,
        )
    except ValueError as e:
        raise ConfigError(str(e))


def cmd_filter(args) -> None:
    config = _resolve_filter_config(args)
    seeds = [int(s) for s in args.seeds.split(",") if s.strip()]
    if not seeds:
        raise ConfigError("--seeds must list at least one seed")
    if len(set(seeds)) != len(seeds):
        raise ConfigError("--seeds contains duplicates")
    train = read_dataset(args.train)
    eval_ds = read_dataset(args.eval) if args.eval else None
    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    for seed in seeds:
        cfg = replace(config, seed=seed)
        if eval_ds is not None:
            result = filter_engine.aflite_eval(train, eval_ds, cfg)
        else:
            result = filter_engine.aflite_standard(train, cfg)
        write_result(result, out / f"result_seed{seed}.jsonl",
                     extra_header={"adversary": args.adversary_name})
    inputs = [args.train] + ([args.eval] if args.eval else [])
    _write_manifest(out, "filter", vars(args).copy(), inputs)
    print(f"wrote {len(seeds)} result file(s) to {out}")


# --- analyze --------------------------------------------------------------

def _subset_ids(result, eval_ds, which):
    all_ids = set(eval_ds.ids())
    if which == "full":
        return all_ids
    if result is None:
        raise ConfigError(f"--subset {which} needs at least one --results file")
    if which == "selected":
        return set(result.eval_selected_ids)
    removed = {}
    for rec in result.eval_history:
        for eid in rec.removed_eval_ids:
            removed[eid] = rec.iteration_index
    if which == "first-pass":
        return {eid for eid, it in removed.items() if it == 1}
    if which == "later":
        return {eid for eid, it in removed.items() if it >= 2}
    raise ConfigError(f"unknown subset {which!r}")


def cmd_analyze(args) -> None:
    dataset = read_dataset(args.dataset)
    preds = [read_predictions(p) for p in args.preds] if args.preds else []
    results = []
    for rp in args.results or []:
        result, header = read_result(rp)
        results.append((result, header.get("adversary", Path(rp).stem), header["seed"]))
    gold = None
    if args.gold:
        with open(args.gold, encoding="utf-8") as f:
            gold = json.load(f)

    if args.metric in ("f1", "em") and gold is None:
        raise ConfigError(f"--metric {args.metric} requires --gold")
    if args.metric == "agreement" and not dataset.has_annotators():
        raise ConfigError(f"dataset {args.dataset} has no annotator labels")
    if args.metric in ("accuracy", "f1", "em") and not preds:
        raise ConfigError(f"--metric {args.metric} requires at least one --preds file")

    contexts = results if results else [(None, "-", "-")]
    rows = []

    def measure(ps, subset):
        if args.metric == "accuracy":
            return analysis.accuracy(ps, dataset, subset)
        if args.metric == "f1":
            return analysis.qa_f1(ps, gold, subset)
        if args.metric == "em":
            return analysis.qa_em(ps, gold, subset)
        raise ConfigError(f"unknown metric {args.metric!r}")

    if args.metric == "agreement":
        per_adv = {}
        for result, adv, seed in contexts:
            ids = _subset_ids(result, dataset, args.subset)
            if not ids:
                raise ConfigError(f"subset {args.subset!r} is empty for adversary {adv!r}")
            value = analysis.agreement_rate(
                dataset, analysis.SubsetSpec.of(args.subset, ids), reference=args.reference
            )
            rows.append(["-", adv, args.subset, seed, "agreement", value])
            per_adv.setdefault(adv, []).append(value)
        for adv, vals in per_adv.items():
            agg = analysis.aggregate_runs(vals)
            rows.append(["-", adv, args.subset, "mean", "agreement", agg["mean"]])
            rows.append(["-", adv, args.subset, "std", "agreement", agg["std"]])
    else:
        per_key = {}
        for ps in preds:
            for result, adv, seed in contexts:
                ids = _subset_ids(result, dataset, args.subset)
                if not ids:
                    raise ConfigError(f"subset {args.subset!r} is empty for adversary {adv!r}")
                value = measure(ps, analysis.SubsetSpec.of(args.subset, ids))
                rows.append([ps.model_name, adv, args.subset, seed, args.metric, value])
                per_key.setdefault((ps.model_name, adv), []).append(value)
        for (model, adv), vals in per_key.items():
            agg = analysis.aggregate_runs(vals)
            rows.append([model, adv, args.subset, "mean", args.metric, agg["mean"]])
            rows.append([model, adv, args.subset, "std", args.metric, agg["std"]])

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, delimiter="\t")
        w.writerow(REPORT_COLUMNS)
        for row in rows:
            w.writerow([row[0], row[1], row[2], row[3], row[4], repr(float(row[5]))])
    inputs = [args.dataset] + list(args.preds or []) + list(args.results or [])
    if args.gold:
        inputs.append(args.gold)
    _write_manifest(out_path.parent, "analyze", vars(args).copy(), inputs)
    print(f"wrote {len(rows)} report rows to {out_path}")


# --- rank -----------------------------------------------------------------

def _read_report(path):
    with open(path, newline="", encoding="utf-8") as f:
        reader = csv.DictReader(f, delimiter="\t")
        return list(reader)


def cmd_rank(args) -> None:
    rows = _read_report(args.report)
    # aggregated rows only; per-seed rows would double-count
    mean_rows = [r for r in rows if r["seed"] == "mean"]
    if not mean_rows:
        raise ConfigError(f"report {args.report} has no aggregated (seed=mean) rows")

    unfiltered = {
        r["model"]: float(r["value"]) for r in mean_rows if r["subset"] == "full"
    }
    filtered_by_adv = {}
    for r in mean_rows:
        if r["subset"] == "full":
            continue
        filtered_by_adv.setdefault(r["adversary"], {})[r["model"]] = float(r["value"])

    out_path = Path(args.out)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    out_rows = []
    if unfiltered:
        ranking = analysis.rank_models(unfiltered)
        for model, score, rank in ranking.entries:
            out_rows.append(["unfiltered", model, repr(score), rank, ""])
    for adv in sorted(filtered_by_adv):
        ranking = analysis.rank_models(filtered_by_adv[adv])
        for model, score, rank in ranking.entries:
            out_rows.append([adv, model, repr(score), rank, ""])

    if args.self_pairing:
        with open(args.self_pairing, encoding="utf-8") as f:
            pairing = json.load(f)
        if not unfiltered:
            raise ConfigError("--self-pairing needs subset=full rows in the report")
        try:
            deltas = analysis.self_filter_rank_change(unfiltered, filtered_by_adv, pairing)
        except KeyError as e:
            raise ConfigError(f"unmatched pairing: {e}")
        base = analysis.rank_models(unfiltered)
        for model in sorted(deltas):
            adv = pairing[model]
            filt_rank = analysis.rank_models(filtered_by_adv[adv]).rank_of(model)
            out_rows.append([adv, model, "", filt_rank, deltas[model]])

    with open(out_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f, delimiter="\t")
        w.writerow(["adversary", "model", "score", "rank", "rank_delta"])
        w.writerows(out_rows)
    inputs = [args.report] + ([args.self_pairing] if args.self_pairing else [])
    _write_manifest(out_path.parent, "rank", vars(args).copy(), inputs)
    print(f"wrote ranking with {len(out_rows)} rows to {out_path}")


# --- rerun ----------------------------------------------------------------

def cmd_rerun(args) -> None:
    with open(args.manifest, encoding="utf-8") as f:
        manifest = json.load(f)
    command = manifest["command"]
    config = dict(manifest["config"])
    config.pop("func", None)
    if args.out_dir:
        for key in ("out_dir",):
            if key in config:
                config[key] = args.out_dir
        if "out" in config:
            config["out"] = str(Path(args.out_dir) / Path(config["out"]).name)
    ns = argparse.Namespace(**config)
    {"synth": cmd_synth, "filter": cmd_filter, "analyze": cmd_analyze, "rank": cmd_rank}[
        command
    ](ns)


# --- parser ---------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="advfilter", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    ps = sub.add_parser("synth", help="generate a synthetic embedded dataset")
    ps.add_argument("--num-train", type=int, default=200)
    ps.add_argument("--num-eval", type=int, default=60)
    ps.add_argument("--dim", type=int, default=10)
    ps.add_argument("--num-classes", type=int, default=2)
    ps.add_argument("--easy-fraction", type=float, default=0.6)
    ps.add_argument("--noise-fraction", type=float, default=0.1)
    ps.add_argument("--annotators", type=int, default=5)
    ps.add_argument("--flip-easy", type=float, default=0.05)
    ps.add_argument("--flip-hard", type=float, default=0.3)
    ps.add_argument("--adversary-strength", type=float, default=0.8)
    ps.add_argument("--signal-scale", type=float, default=0.9)
    ps.add_argument("--seed", type=int, default=0)
    ps.add_argument("--out-dir", required=True)
    ps.set_defaults(func=cmd_synth)

    pf = sub.add_parser("filter", help="run adversarial filtering")
    pf.add_argument("--train", required=True)
    pf.add_argument("--eval", default=None,
                    help="evaluation dataset; omit for training-set-only filtering")
    pf.add_argument("--preset", choices=sorted(PRESETS))
    pf.add_argument("--n", type=int, default=None)
    pf.add_argument("--m", type=int, default=None)
    pf.add_argument("--t", type=int, default=None)
    pf.add_argument("--k", type=int, default=None)
    pf.add_argument("--tau", type=float, default=None)
    pf.add_argument("--seeds", default="0")
    pf.add_argument("--adversary-name", default="default")
    pf.add_argument("--epochs", type=int, default=20)
    pf.add_argument("--batch-size", type=int, default=256)
    pf.add_argument("--learning-rate", type=float, default=0.01)
    pf.add_argument("--l2", type=float, default=1e-4)
    pf.add_argument("--standardize", action="store_true")
    pf.add_argument("--out-dir", required=True)
    pf.set_defaults(func=cmd_filter)

    pa = sub.add_parser("analyze", help="compute metrics over subsets")
    pa.add_argument("--dataset", required=True)
    pa.add_argument("--preds", nargs="*", default=[])
    pa.add_argument("--results", nargs="*", default=[])
    pa.add_argument("--gold", default=None, help="JSON map id -> list of answers (f1/em)")
    pa.add_argument("--metric", required=True,
                    choices=["accuracy", "agreement", "f1", "em"])
    pa.add_argument("--subset", default="full",
                    choices=["selected", "first-pass", "later", "full"])
    pa.add_argument("--reference", default="gold", choices=["gold", "majority"])
    pa.add_argument("--out", required=True)
    pa.set_defaults(func=cmd_analyze)

    pr = sub.add_parser("rank", help="rank models from an analyze report")
    pr.add_argument("--report", required=True)
    pr.add_argument("--self-pairing", default=None,
                    help="JSON map model -> adversary for rank-change deltas")
    pr.add_argument("--out", required=True)
    pr.set_defaults(func=cmd_rank)

    pm = sub.add_parser("rerun", help="replay a command from its manifest")
    pm.add_argument("manifest")
    pm.add_argument("--out-dir", default=None, help="redirect outputs")
    pm.set_defaults(func=cmd_rerun)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except (DatasetFormatError, ValueError, KeyError, OSError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
