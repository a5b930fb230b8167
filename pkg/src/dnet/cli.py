"""Command-line interface.

Exit codes: 0 success, 2 validation failure, 3 resource guard exceeded,
4 bound violation detected in certification mode.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import harness
from .bounds import (
    compare_entropy_bounds,
    count_bounds,
    covering_entropy,
    improved_log_cardinality,
    rademacher_bound,
    risk_rates,
    two_layer_entropy,
)
from .errors import (
    EXIT_BOUND_VIOLATION,
    EXIT_OK,
    EXIT_RESOURCE,
    EXIT_VALIDATION,
    BoundViolationError,
    ResourceLimitError,
    ValidationError,
)
from .families import (
    MatrixFamily,
    identity_family,
    irreducible_cesaro,
    near_identity_family,
    projection_example,
    toeplitz_demo,
)
from .network import load_network, save_network
from .packing import build_packing, lower_bound_rate, packing_certificates
from .sampler import enumerate_cover_elements, normalize
from .variation import (
    average_variation,
    reduced_balance_residual,
    rescale_canonical,
    rescale_global,
    rescale_per_layer,
    subnetwork_variations,
)

BOUND_PRESETS = {
    "shallow": {"L": 2, "v": 1.0, "eps": 0.25, "d_bar": None, "d_in": 100, "n": 10_000, "B": 1.0},
    "deep": {"L": 8, "v": 2.0, "eps": 0.25, "d_bar": 1_000.0, "d_in": 1_000, "n": 100_000, "B": 2.0},
    "wide": {"L": 3, "v": 1.0, "eps": 0.1, "d_bar": 1e6, "d_in": 1e6, "n": 10_000, "B": 1.0},
}


def _emit(payload: dict, out: str | None) -> None:
    text = json.dumps(payload, indent=2, sort_keys=True, default=_jsonable)
    if out:
        Path(out).write_text(text + "\n")
    else:
        print(text)


def _jsonable(obj):
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    raise TypeError(f"not JSON serializable: {type(obj)}")


def _write_csv_rows(rows: list[dict], path: str) -> None:
    if not rows:
        raise ValidationError("nothing to write")
    columns = list(rows[0])
    lines = [",".join(columns)]
    for row in rows:
        lines.append(",".join(harness._format_value(row[c]) for c in columns))
    Path(path).write_text("\n".join(lines) + "\n")


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------

def _cmd_variation(args) -> int:
    net = load_network(args.netfile)
    rescaled = None
    if args.canonical:
        rescaled = rescale_canonical(net, reduced=args.reduced)
    elif args.per_layer:
        rescaled = rescale_per_layer(net)
    elif args.global_scale:
        rescaled = rescale_global(net)
    target = rescaled if rescaled is not None else net
    summary = subnetwork_variations(target)
    v_bar, v_comp = average_variation(summary, reduced=args.reduced)
    payload = summary.to_dict()
    payload["selected_v_bar"] = v_bar
    payload["selected_v_composite"] = v_comp
    if args.canonical and args.reduced:
        payload["reduced_balance_residual"] = reduced_balance_residual(target)
    if rescaled is not None and args.out:
        save_network(rescaled, args.out)
        payload["rescaled_netfile"] = args.out
    _emit(payload, args.json)
    return EXIT_OK


def _cmd_sparsify(args) -> int:
    config = harness.ExperimentConfig(
        m_grid=(args.M,),
        n_seeds=args.seeds,
        seed_base=args.seed_base,
        n_points=args.points,
        point_seed=args.point_seed,
        net_file=args.netfile,
        budget=args.budget,
        out_csv=args.csv,
        out_json=args.json,
    )
    result = harness.run_certification_sweep(config)
    if not args.csv and not args.json:
        _emit(result.summary, None)
    return EXIT_OK


def _cmd_bounds(args) -> int:
    if args.spec in BOUND_PRESETS:
        params = dict(BOUND_PRESETS[args.spec])
    else:
        path = Path(args.spec)
        if not path.exists():
            raise ValidationError(
                f"'{args.spec}' is neither a preset {sorted(BOUND_PRESETS)} nor a file"
            )
        params = json.loads(path.read_text())
    L = int(params["L"])
    v, eps, d_in, n = params["v"], params["eps"], int(params["d_in"]), int(params["n"])
    d_bar = params.get("d_bar")
    B = params.get("B", 1.0)

    log_card = (
        improved_log_cardinality(L, int(params.get("M", 16)), d_bar, d_in)
        if L >= 2
        else None
    )
    payload = {
        "inputs": params,
        "count_bounds": count_bounds(int(params.get("M", 16)), int(params.get("D", 1000))).to_dict(),
        "log_cardinality": log_card._asdict() if log_card else None,
        "covering_entropy": covering_entropy(L, v, eps, d_bar, d_in),
        "two_layer_entropy": two_layer_entropy(v, eps, d_in)._asdict(),
        "risk_rates": risk_rates(L, v, n, d_bar, d_in).to_dict(),
        "rademacher": rademacher_bound(L, v, n, d_bar, d_in, B).to_dict(),
        "lower_bound": lower_bound_rate(v, B, params.get("sigma2", 1.0), d_in, n).to_dict(),
    }
    _emit(payload, args.json)
    if args.csv:
        rows = []
        for eps_i in np.geomspace(eps / 8.0, eps * 8.0, num=13):
            rows.append(
                {
                    "param": "eps",
                    "value": float(eps_i),
                    "covering_entropy": covering_entropy(L, v, float(eps_i), d_bar, d_in),
                    "two_layer_entropy": two_layer_entropy(v, float(eps_i), d_in).spectral,
                }
            )
        for n_i in (n // 4, n // 2, n, 2 * n, 4 * n):
            rep = risk_rates(L, v, max(n_i, 1), d_bar, d_in)
            rows.append(
                {
                    "param": "n",
                    "value": float(n_i),
                    "covering_entropy": rep.values["deep"],
                    "two_layer_entropy": rep.values["two_layer_cube_root"],
                }
            )
        _write_csv_rows(rows, args.csv)
    return EXIT_OK


def _cmd_examples(args) -> int:
    params = dict(kv.split("=", 1) for kv in args.params)
    params = {k: float(v) for k, v in params.items()}
    rows: list[dict] = []
    depths = [int(d) for d in np.unique(np.geomspace(4, args.max_depth, num=9).astype(int))]

    if args.family == "projection":
        t, s = params.get("t", 0.5), params.get("s", 0.5)
        W0, W1 = params.get("W0", 1.0), [1.0, 1.0]
        fam = MatrixFamily("projection", {"t": t, "s": s, "W0": W0, "W1": W1})
        for L in depths:
            rep = projection_example(t, s, L, W0, W1)
            cmp_rows = compare_entropy_bounds([fam.network(L)], X_norm=1.0, eps=0.5)
            rows.append(
                {
                    "L": L,
                    "exact": rep.exact,
                    "asymptotic": rep.asymptotic,
                    "log_sigma_product": cmp_rows[0]["log_sigma_product"],
                    "floor_to_path_ratio": cmp_rows[0]["floor_to_path_ratio"],
                }
            )
    elif args.family == "irreducible":
        Q = np.array([[0.2, 0.8], [0.7, 0.3]])
        for L in depths:
            rep = irreducible_cesaro(Q, params.get("W0", 1.0), [1.0, 1.0], L)
            rows.append(
                {
                    "L": L,
                    "v_bar": rep.v_bar,
                    "limit": rep.limit_v_bar,
                    "rho": rep.rho,
                    "rate_exponent": rep.rate_exponent,
                }
            )
    elif args.family == "identity":
        L = int(params.get("L", 8))
        w1_norm = params.get("w1_norm", 1.5)
        for dim in (2, 8, 20, 80, 200):
            rep = identity_family(dim, L, params.get("W0", 1.0), np.full(dim, w1_norm / dim))
            rows.append(
                {"dim": dim, "plain": rep.plain, "reduced": rep.reduced,
                 "generic_plain": rep.generic_plain, "generic_reduced": rep.generic_reduced}
            )
    elif args.family == "near_identity":
        dim = int(params.get("dim", 4))
        rng = np.random.Generator(np.random.Philox(key=int(params.get("seed", 0))))
        for L in depths:
            Qs = [
                rng.uniform(0.0, 2.0 / (L * dim * dim), size=(dim, dim))
                for _ in range(L - 1)
            ]
            rep = near_identity_family(Qs, params.get("W0", 1.0), np.full(dim, 1.0 / dim))
            rows.append(
                {"L": L, "exact_reduced": rep.exact_reduced, "bound": rep.bound,
                 "S": rep.S, "holds": rep.holds}
            )
    elif args.family == "toeplitz":
        dim = int(params.get("dim", 16))
        rows = toeplitz_demo({0: 0.5, 1: 0.25, -1: 0.25}, dim)
    else:
        raise ValidationError(f"unknown family {args.family!r}")

    if args.csv:
        _write_csv_rows(rows, args.csv)
    else:
        _emit({"family": args.family, "rows": rows}, None)
    return EXIT_OK


def _cmd_packing(args) -> int:
    ps = build_packing(args.d, args.A, args.B, args.T, args.seed, relaxed=args.relaxed)
    certs = packing_certificates(ps)
    payload = certs.to_dict()
    payload["rate"] = lower_bound_rate(
        v=args.B * args.A**2, B=args.B, sigma2=args.sigma2, d_in=args.d, n=args.n
    ).to_dict()
    _emit(payload, args.json)
    return EXIT_OK


def _cmd_sweep(args) -> int:
    config = harness.ExperimentConfig.from_json(args.config)
    result = harness.run_certification_sweep(config)
    if not config.out_json:
        _emit(result.summary, None)
    if args.certify:
        harness.certify(result)
    return EXIT_OK


def _cmd_select(args) -> int:
    net = load_network(args.netfile)
    measure = normalize(net)
    cover = enumerate_cover_elements(measure, args.M, max_elements=args.max_elements)
    rng = np.random.Generator(np.random.Philox(key=args.seed))
    X = rng.uniform(-1.0, 1.0, size=(args.n, net.d_in))
    truth = harness.evaluate_batch(net, X)
    y = truth + rng.normal(0.0, args.noise, size=args.n)
    result = harness.run_penalized_selection(X, y, cover)
    payload = {
        "selected_index": result.index,
        "selected_hash": result.element.cover_hash(),
        "psi": result.psi,
        "cover_size": len(cover),
        "trace": list(result.trace),
    }
    _emit(payload, args.json)
    return EXIT_OK


# ---------------------------------------------------------------------------
# parser
# ---------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dnet",
        description="Variation calculus, sparse covers, and bound calculators for deep ramp networks",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("variation", help="variation summary and rescalings of a network file")
    p.add_argument("netfile")
    group = p.add_mutually_exclusive_group()
    group.add_argument("--canonical", action="store_true")
    group.add_argument("--per-layer", dest="per_layer", action="store_true")
    group.add_argument("--global", dest="global_scale", action="store_true")
    p.add_argument("--reduced", action="store_true")
    p.add_argument("--out", help="write the rescaled network here")
    p.add_argument("--json", help="write the summary JSON here instead of stdout")
    p.set_defaults(func=_cmd_variation)

    p = sub.add_parser("sparsify", help="sample sparse cover elements and measure errors")
    p.add_argument("netfile")
    p.add_argument("--M", type=int, required=True)
    p.add_argument("--seeds", type=int, default=200)
    p.add_argument("--seed-base", type=int, default=0)
    p.add_argument("--points", type=int, default=512)
    p.add_argument("--point-seed", type=int, default=777)
    p.add_argument("--budget", type=float, default=None)
    p.add_argument("--csv", help="per-seed records CSV path")
    p.add_argument("--json", help="summary JSON path")
    p.set_defaults(func=_cmd_sparsify)

    p = sub.add_parser("bounds", help="evaluate the closed-form bound calculators")
    p.add_argument("spec", help=f"preset name {sorted(BOUND_PRESETS)} or a params JSON file")
    p.add_argument("--csv", help="parameter sweep CSV path")
    p.add_argument("--json", help="report JSON path instead of stdout")
    p.set_defaults(func=_cmd_bounds)

    p = sub.add_parser("examples", help="structured family sweeps")
    p.add_argument("family", choices=["projection", "irreducible", "identity", "near_identity", "toeplitz"])
    p.add_argument("params", nargs="*", help="key=value family parameters")
    p.add_argument("--max-depth", type=int, default=256)
    p.add_argument("--csv", help="sweep CSV path")
    p.set_defaults(func=_cmd_examples)

    p = sub.add_parser("packing", help="build and certify a sinusoidal packing set")
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--A", type=int, required=True)
    p.add_argument("--B", type=float, required=True)
    p.add_argument("--T", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--relaxed", action="store_true")
    p.add_argument("--sigma2", type=float, default=1.0)
    p.add_argument("--n", type=int, default=10_000)
    p.add_argument("--json", help="certificate JSON path instead of stdout")
    p.set_defaults(func=_cmd_packing)

    p = sub.add_parser("sweep", help="run a certification sweep from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--certify", action="store_true", help="exit 4 if any bound flag fails")
    p.set_defaults(func=_cmd_sweep)

    p = sub.add_parser("select", help="penalized selection over an enumerated cover")
    p.add_argument("netfile")
    p.add_argument("--M", type=int, default=2)
    p.add_argument("--n", type=int, default=256)
    p.add_argument("--noise", type=float, default=0.1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--max-elements", type=int, default=100_000)
    p.add_argument("--json", help="result JSON path instead of stdout")
    p.set_defaults(func=_cmd_select)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ResourceLimitError as exc:
        print(f"resource guard: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except BoundViolationError as exc:
        print(f"bound violation: {exc}", file=sys.stderr)
        return EXIT_BOUND_VIOLATION


if __name__ == "__main__":
    sys.exit(main())
