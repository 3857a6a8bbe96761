"""Command-line surface.

Subcommands: solve (classical iterations), train (fit the unrolled
network), cluster (similarity graph + factorization + labels),
check-bounds (penalty-weight bound report), synth (planted instance
files). Every run writes a config snapshot holding all effective values,
so a run directory is self-describing and exactly repeatable.

Exit codes: 0 success, 2 bad input, 3 numerical divergence, 4 bound
violation.
"""

import argparse
import json
import math
import os
import sys

from . import classical as cl
from . import graph, metrics, net, theory
from . import linalg as la
from .errors import (
    CheckpointError,
    DivergenceError,
    InputError,
    MatrixFormatError,
    NumericalError,
)
from .matio import load_matrix, save_matrix

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_DIVERGED = 3
EXIT_BOUNDS = 4

_ASYMMETRY_TOL = 1e-8

_DEFAULTS = {
    "solve": {
        "input": None,
        "out": "runs",
        "rank": None,
        "solver": "scheme",
        "lambda": None,
        "max_iters": 200,
        "tol": 0.0,
        "seed": 0,
    },
    "train": {
        "input": None,
        "out": "runs",
        "rank": None,
        "blocks": 10,
        "lr": 0.5,
        "lr_decay": 0.97,
        "beta": 5e-6,
        "gamma_l1": 0.0,
        "epochs": 150,
        "lambda": None,
        "lambda_projection": True,
        "seed": 0,
    },
    "cluster": {
        "input": None,
        "labels": None,
        "out": "runs",
        "rank": None,
        "k_neighbors": 7,
        "self_tuning": True,
        "normalize": True,
        "solver": "net",
        "warm_start": 50,
        "max_iters": 300,
        "tol": 0.0,
        "blocks": 10,
        "lr": 0.5,
        "lr_decay": 0.97,
        "beta": 5e-6,
        "gamma_l1": 0.0,
        "epochs": 150,
        "lambda": None,
        "lambda_projection": True,
        "seed": 0,
    },
    "check-bounds": {
        "input": None,
        "out": "runs",
        "rank": None,
        "blocks": 10,
        "checkpoint": None,
        "lambda": None,
        "eps": 0.05,
        "samples": 200,
        "seed": 0,
    },
    "synth": {
        "n": None,
        "rank": None,
        "noise": 0.0,
        "out": "runs",
        "seed": 0,
    },
}


def _add_common(sp):
    sp.add_argument("--out", help="output directory (default runs)")
    sp.add_argument("--config", help="JSON config file; explicit flags win")
    sp.add_argument("--seed", type=int, help="seed for factor initialization")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="symnmf",
        description="Symmetric nonnegative factorization toolkit",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run the classical alternating scheme")
    sp.add_argument("--input", help="symmetric matrix file")
    sp.add_argument("--rank", type=int, help="factor rank r")
    sp.add_argument("--solver", choices=["scheme", "pgd"], help="iteration to run")
    sp.add_argument("--lambda", dest="lambda_", type=float, help="penalty weight")
    sp.add_argument("--max-iters", type=int, help="iteration budget")
    sp.add_argument("--tol", type=float, help="stopping tolerance on E")
    _add_common(sp)

    sp = sub.add_parser("train", help="train the unrolled network")
    sp.add_argument("--input", help="symmetric matrix file")
    sp.add_argument("--rank", type=int, help="factor rank r")
    sp.add_argument("--blocks", type=int, help="network depth K")
    sp.add_argument("--lr", type=float, help="initial learning rate")
    sp.add_argument("--lr-decay", type=float, help="geometric lr decay per epoch")
    sp.add_argument("--beta", type=float, help="weight-drift regularizer")
    sp.add_argument("--gamma-l1", type=float, help="l1 push on the final factor")
    sp.add_argument("--epochs", type=int, help="training epochs")
    sp.add_argument(
        "--lambda",
        dest="lambda_",
        type=float,
        help="fix the penalty weight instead of training it",
    )
    sp.add_argument(
        "--no-lambda-projection",
        action="store_const",
        const=True,
        default=None,
        help="disable the stability projection on the penalty weight",
    )
    _add_common(sp)

    sp = sub.add_parser("cluster", help="similarity graph + factorization + labels")
    sp.add_argument("--input", help="samples x features matrix file")
    sp.add_argument("--labels", help="ground-truth labels, one per line")
    sp.add_argument("--rank", type=int, help="number of clusters")
    sp.add_argument("--k-neighbors", type=int, help="graph neighborhood size")
    sp.add_argument(
        "--no-self-tuning",
        action="store_const",
        const=True,
        default=None,
        help="use a global median bandwidth instead of per-point ones",
    )
    sp.add_argument(
        "--no-normalize",
        action="store_const",
        const=True,
        default=None,
        help="skip symmetric degree normalization",
    )
    sp.add_argument("--solver", choices=["scheme", "pgd", "net"], help="factorizer")
    sp.add_argument(
        "--warm-start",
        type=int,
        help="classical sweeps refining the start factor before the net",
    )
    sp.add_argument("--max-iters", type=int, help="budget for scheme/pgd")
    sp.add_argument("--tol", type=float, help="stopping tolerance for scheme/pgd")
    sp.add_argument("--blocks", type=int, help="network depth K")
    sp.add_argument("--lr", type=float, help="initial learning rate")
    sp.add_argument("--lr-decay", type=float, help="geometric lr decay per epoch")
    sp.add_argument("--beta", type=float, help="weight-drift regularizer")
    sp.add_argument("--gamma-l1", type=float, help="l1 push on the final factor")
    sp.add_argument("--epochs", type=int, help="training epochs")
    sp.add_argument("--lambda", dest="lambda_", type=float, help="fixed penalty weight")
    sp.add_argument(
        "--no-lambda-projection",
        action="store_const",
        const=True,
        default=None,
        help="disable the stability projection on the penalty weight",
    )
    _add_common(sp)

    sp = sub.add_parser("check-bounds", help="penalty-weight bound report")
    sp.add_argument("--input", help="symmetric matrix file")
    sp.add_argument("--rank", type=int, help="factor rank r (fresh network)")
    sp.add_argument("--blocks", type=int, help="network depth K (fresh network)")
    sp.add_argument("--checkpoint", help="saved network to check instead")
    sp.add_argument("--lambda", dest="lambda_", type=float, help="penalty weight")
    sp.add_argument("--eps", type=float, help="weight-drift ball radius")
    sp.add_argument("--samples", type=int, help="perturbation samples")
    _add_common(sp)

    sp = sub.add_parser("synth", help="write a planted clustered instance")
    sp.add_argument("--n", type=int, help="matrix size")
    sp.add_argument("--rank", type=int, help="planted cluster count")
    sp.add_argument("--noise", type=float, help="relative perturbation level")
    _add_common(sp)

    return parser


def effective_config(args, command):
    """Defaults, overridden by the config file, overridden by explicit flags."""
    cfg = dict(_DEFAULTS[command])
    config_path = getattr(args, "config", None)
    if config_path:
        try:
            with open(config_path) as fh:
                loaded = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InputError(f"config file {config_path}: {exc}") from None
        if not isinstance(loaded, dict):
            raise InputError(f"config file {config_path} must hold an object")
        for key, value in loaded.items():
            if key == "command":
                continue
            if key not in cfg:
                raise InputError(f"config file {config_path}: unknown key {key!r}")
            cfg[key] = value
    for key in cfg:
        arg_name = "lambda_" if key == "lambda" else key
        value = getattr(args, arg_name, None)
        if value is not None:
            cfg[key] = value
    if getattr(args, "no_lambda_projection", None):
        cfg["lambda_projection"] = False
    if getattr(args, "no_self_tuning", None):
        cfg["self_tuning"] = False
    if getattr(args, "no_normalize", None):
        cfg["normalize"] = False
    return cfg


def _require(cfg, key, command):
    if cfg.get(key) is None:
        raise InputError(f"--{key.replace('_', '-')} is required for {command}")
    return cfg[key]


def _require_rank(cfg, command):
    rank = _require(cfg, "rank", command)
    if rank < 1:
        raise InputError(f"--rank must be >= 1, got {rank}")
    return rank


def _prepare_out(cfg, command):
    outdir = cfg["out"]
    os.makedirs(outdir, exist_ok=True)
    snap = {"command": command}
    snap.update(cfg)
    with open(os.path.join(outdir, "config.json"), "w") as fh:
        json.dump(snap, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return outdir


def _load_symmetric(path):
    x = load_matrix(path)
    if x.rows != x.cols:
        raise InputError(f"matrix must be square, got {x.rows}x{x.cols}")
    asym = la.max_asymmetry(x)
    if asym > _ASYMMETRY_TOL:
        raise InputError(
            f"matrix must be symmetric: max asymmetry {asym:g} "
            f"exceeds {_ASYMMETRY_TOL:g}"
        )
    return x


def _write_trace(path, trace, with_lambda=False):
    with open(path, "w") as fh:
        header = "iteration\trel_error\tu_fro"
        if with_lambda:
            header += "\tlambda"
        fh.write(header + "\n")
        for rec in trace:
            line = f"{rec.iteration}\t{rec.rel_error:.17g}\t{rec.u_fro:.17g}"
            if with_lambda:
                line += f"\t{rec.lam:.17g}"
            fh.write(line + "\n")


def _load_labels(path, expected):
    with open(path) as fh:
        tokens = [line.strip() for line in fh if line.strip()]
    labels = []
    for tok in tokens:
        try:
            labels.append(int(tok))
        except ValueError:
            labels.append(tok)
    if len(labels) != expected:
        raise InputError(
            f"label count {len(labels)} does not match sample count {expected}"
        )
    return labels


def cmd_solve(cfg):
    x = _load_symmetric(_require(cfg, "input", "solve"))
    rank = _require_rank(cfg, "solve")
    outdir = _prepare_out(cfg, "solve")
    u0 = cl.random_factor(x, rank, cfg["seed"])
    lam = cfg["lambda"] if cfg["lambda"] is not None else la.fro_norm(x)
    ccfg = cl.ClassicalConfig(lam=lam, max_iters=cfg["max_iters"], tol=cfg["tol"])
    if cfg["solver"] == "scheme":
        u, trace = cl.run_classical(x, u0, ccfg)
    elif cfg["solver"] == "pgd":
        u, trace = cl.run_pgd(x, u0, ccfg)
    else:
        raise InputError(f"solve supports scheme or pgd, got {cfg['solver']!r}")
    save_matrix(u, os.path.join(outdir, "factor.txt"))
    _write_trace(os.path.join(outdir, "trace.tsv"), trace)
    print(f"final rel_error: {trace.final_error():.17g}")
    print(f"wrote {outdir}")
    return EXIT_OK


def _train_config(cfg):
    return net.TrainConfig(
        num_blocks=cfg["blocks"],
        lr=cfg["lr"],
        lr_decay=cfg["lr_decay"],
        beta=cfg["beta"],
        gamma_l1=cfg["gamma_l1"],
        epochs=cfg["epochs"],
        lambda_projection=cfg["lambda_projection"],
        lambda_override=cfg["lambda"],
        seed=cfg["seed"],
    )


def cmd_train(cfg):
    x = _load_symmetric(_require(cfg, "input", "train"))
    rank = _require_rank(cfg, "train")
    outdir = _prepare_out(cfg, "train")
    u0 = cl.random_factor(x, rank, cfg["seed"])
    params, trace = net.train(x, u0, _train_config(cfg))
    net.save_checkpoint(params, os.path.join(outdir, "checkpoint.bin"))
    outputs, _ = net.net_forward(u0, params)
    save_matrix(outputs[-1], os.path.join(outdir, "factor.txt"))
    _write_trace(os.path.join(outdir, "trace.tsv"), trace, with_lambda=True)
    print(f"final rel_error: {trace.final_error():.17g}")
    print(f"final lambda: {params.lam:.17g}")
    print(f"wrote {outdir}")
    return EXIT_OK


def cmd_cluster(cfg):
    feats = load_matrix(_require(cfg, "input", "cluster"))
    rank = _require_rank(cfg, "cluster")
    truth = None
    if cfg["labels"]:
        truth = _load_labels(cfg["labels"], feats.rows)
    scfg = graph.SimilarityConfig(
        k_neighbors=cfg["k_neighbors"],
        self_tuning=cfg["self_tuning"],
        normalize=cfg["normalize"],
    )
    sim = graph.build_similarity(feats, scfg)
    outdir = _prepare_out(cfg, "cluster")
    u0 = cl.random_factor(sim, rank, cfg["seed"])
    lam = cfg["lambda"] if cfg["lambda"] is not None else la.fro_norm(sim)
    if cfg["solver"] == "scheme":
        ccfg = cl.ClassicalConfig(lam=lam, max_iters=cfg["max_iters"], tol=cfg["tol"])
        u, trace = cl.run_classical(sim, u0, ccfg)
    elif cfg["solver"] == "pgd":
        ccfg = cl.ClassicalConfig(lam=lam, max_iters=cfg["max_iters"], tol=cfg["tol"])
        u, trace = cl.run_pgd(sim, u0, ccfg)
    elif cfg["solver"] == "net":
        if cfg["warm_start"] > 0:
            wcfg = cl.ClassicalConfig(lam=lam, max_iters=cfg["warm_start"], tol=0.0)
            u0, _ = cl.run_classical(sim, u0, wcfg)
        params, trace = net.train(sim, u0, _train_config(cfg))
        outputs, _ = net.net_forward(u0, params)
        u = outputs[-1]
        net.save_checkpoint(params, os.path.join(outdir, "checkpoint.bin"))
    else:
        raise InputError(f"unknown solver {cfg['solver']!r}")
    pred = metrics.assign_labels(u)
    if truth is not None:
        result = metrics.ClusteringResult(
            predicted=pred,
            accuracy=metrics.accuracy(pred, truth),
            nmi=metrics.nmi(pred, truth),
            purity=metrics.purity(pred, truth),
            sparse_factor=metrics.sparse_factor(u),
        )
    else:
        result = metrics.ClusteringResult(predicted=pred)
    save_matrix(u, os.path.join(outdir, "factor.txt"))
    with open(os.path.join(outdir, "labels_pred.txt"), "w") as fh:
        for p in pred:
            fh.write(f"{p}\n")
    with open(os.path.join(outdir, "result.txt"), "w") as fh:
        fh.write(result.to_text())
    _write_trace(
        os.path.join(outdir, "trace.tsv"), trace, with_lambda=cfg["solver"] == "net"
    )
    if truth is not None:
        print(
            f"accuracy: {result.accuracy:.4f} nmi: {result.nmi:.4f} "
            f"purity: {result.purity:.4f}"
        )
    print(f"wrote {outdir}")
    return EXIT_OK


def cmd_check_bounds(cfg):
    x = _load_symmetric(_require(cfg, "input", "check-bounds"))
    outdir = _prepare_out(cfg, "check-bounds")
    if cfg["checkpoint"]:
        params = net.load_checkpoint(cfg["checkpoint"])
        if params.blocks[0].rows != x.rows:
            raise InputError(
                f"checkpoint is for {params.blocks[0].rows} rows, "
                f"matrix has {x.rows}"
            )
        rank = params.blocks[0].cols
        u0 = cl.random_factor(x, rank, cfg["seed"])
    else:
        rank = _require_rank(cfg, "check-bounds")
        u0 = cl.random_factor(x, rank, cfg["seed"])
        lam = cfg["lambda"] if cfg["lambda"] is not None else la.fro_norm(x)
        params = net.init_params(x, u0, lam, cfg["blocks"])
    lam = params.lam

    outputs, caches = net.net_forward(u0, params)
    a = la.fro_norm(u0)
    for u in outputs:
        a = max(a, la.fro_norm(u))
    b_norm = la.spectral_norm(x)

    # measured relative weight drift; the reported ball radius must cover it
    xl = la.add_diag(x, lam)
    eps_meas = 0.0
    for p, cache in zip(params.blocks, caches):
        u_fro = la.fro_norm(cache.u_in)
        if u_fro == 0.0:
            continue
        drift = la.fro_norm(la.add_scaled(p, la.matmul(xl, cache.u_in), -1.0))
        eps_meas = max(eps_meas, drift / ((b_norm + lam) * u_fro))
    eps_used = max(cfg["eps"], eps_meas * (1.0 + 1e-9))

    prox = theory.proximality_lambda_bound(a, eps_used)
    suff = theory.sufficiency_lambda_bound(x, u0)
    bound = max(prox, suff)
    lam_ok = lam > bound

    lines = [
        f"lam: {lam:.17g}",
        f"b_norm: {b_norm:.17g}",
        f"a: {a:.17g}",
        f"eps: {eps_used:.17g}",
        f"proximality_bound: {prox:.17g}",
        f"sufficiency_bound: {suff:.17g}",
        f"combined_bound: {bound:.17g}",
    ]
    if lam > a * a:
        c = theory.proximality_constant(theory.BoundInputs(b_norm, a, eps_used, lam))
        lines.append(f"constant: {c:.17g}")
    else:
        lines.append("constant: unavailable (lam <= a^2)")
    for i, cache in enumerate(caches, start=1):
        exact, cap = theory.inversion_condition_number(cache.u_in, lam)
        lines.append(f"cond_block_{i}: {exact:.17g} bound {cap:.17g}")

    verify_ok = False
    if lam_ok:
        try:
            report = theory.verify_proximality(
                x, u0, params.blocks[0], lam, eps_used, cfg["samples"], cfg["seed"]
            )
            lines.append("verify:")
            for ln in report.to_text().splitlines():
                lines.append("  " + ln)
            verify_ok = report.violations == 0
        except (ValueError, NumericalError) as exc:
            lines.append(f"verify: failed ({exc})")
    passed = lam_ok and verify_ok
    lines.append(f"pass: {str(passed).lower()}")
    text = "\n".join(lines) + "\n"
    with open(os.path.join(outdir, "report.txt"), "w") as fh:
        fh.write(text)
    sys.stdout.write(text)
    print(f"wrote {outdir}")
    return EXIT_OK if passed else EXIT_BOUNDS


def cmd_synth(cfg):
    n = _require(cfg, "n", "synth")
    rank = _require_rank(cfg, "synth")
    if rank > n:
        raise InputError(f"rank {rank} exceeds n {n}")
    outdir = _prepare_out(cfg, "synth")
    inst = graph.synth_planted(n, rank, cfg["noise"], cfg["seed"])
    save_matrix(inst.x, os.path.join(outdir, "x.txt"))
    with open(os.path.join(outdir, "labels.txt"), "w") as fh:
        for lab in inst.labels:
            fh.write(f"{lab}\n")
    print(f"wrote {outdir}")
    return EXIT_OK


_HANDLERS = {
    "solve": cmd_solve,
    "train": cmd_train,
    "cluster": cmd_cluster,
    "check-bounds": cmd_check_bounds,
    "synth": cmd_synth,
}


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = effective_config(args, args.command)
        return _HANDLERS[args.command](cfg)
    except DivergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (
        InputError,
        MatrixFormatError,
        CheckpointError,
        ValueError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
