"""Command line interface: ``nsdyn <command> --config PATH [options]``.

Commands: pressure, entropy, measure, equilibrium, code, verify.

Exit codes: 0 success, 1 verification (or replay) failure, 2 configuration
error, 3 critical exponent undetermined at the requested depth, 4 a standing
hypothesis is violated (e.g. a zero probability).

Every output file records the SHA-256 of the effective configuration and the
seed.  With ``--replay`` nothing is written; the outputs are recomputed and
compared byte for byte with those already in ``--out``.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import re
import sys
from fractions import Fraction

import numpy as np

from .bernoulli import (
    HypothesisViolation,
    entropy_H,
    equilibrium_from_potential,
    equilibrium_identity_residual,
    gibbs_constant,
    gibbs_log_ratios,
    lln_diagnostic,
    measure_pressure_estimate,
    pressure_proxy,
    rng_for,
    sample_path,
)
from .config import ConfigError, RunConfig, load_config
from .expansive import (
    ShiftNDS,
    decode,
    decode_error_bound,
    encode,
    expansiveness_falsifier,
    generator_check,
    generator_from_net,
    pressure_via_orbits,
    semiconjugacy_residual,
    sue_modulus,
)
from .potentials import PotentialSeq, reduce_to_first_coord, sbv_bound
from .pressure import (
    bowen_outer_measure,
    critical_s,
    packing_content,
    separated_P,
    sn_sequence,
    spanning_Q,
)
from .seqspace import PointPrefix, meet_length
from . import verify as verify_mod

EXIT_OK, EXIT_VERIFY, EXIT_CONFIG, EXIT_UNDETERMINED, EXIT_HYPOTHESIS = 0, 1, 2, 3, 4


class CommandResult:
    def __init__(self, files: dict[str, str], code: int = EXIT_OK, message: str = ""):
        self.files = files
        self.config_sha256 = ""
        self.code = code
        self.message = message


def _clean(obj):
    """Make floats JSON-safe: non-finite values become strings."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        return x if math.isfinite(x) else repr(x)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, Fraction):
        return str(obj)
    return obj


def _json(cfg: RunConfig, body: dict) -> str:
    doc = {"config_sha256": cfg.sha256, "seed": cfg.run["seed"], **body}
    return json.dumps(_clean(doc), sort_keys=True, indent=2) + "\n"


def _csv(cfg: RunConfig, text: str) -> str:
    return f"# config_sha256={cfg.sha256}\n# seed={cfg.run['seed']}\n" + text


def _critical(cfg: RunConfig, f: PotentialSeq) -> tuple[dict, bool]:
    run = cfg.run
    N, depth = run["N"], run["depth_max"]
    if not 2 <= N <= depth:
        raise ConfigError("run.N", f"need 2 <= N <= depth_max, got N={N}, depth_max={depth}")
    out, ok = {}, True
    for name, fn in (("bowen", bowen_outer_measure), ("packing", packing_content)):
        res = critical_s(fn, cfg.m, f, N, depth, tol=run["tol"])
        out[name] = {"lo": res.lo, "hi": res.hi, "determined": res.determined, "reason": res.reason}
        ok &= res.determined
    return out, ok


def _pressure_like(cfg: RunConfig, f: PotentialSeq, stem: str) -> CommandResult:
    run = cfg.run
    est = sn_sequence(cfg.m, f, run["N_hi"], run["policy"], run["N_lo"])
    n = run["ladder_n"]
    ladder = []
    for r in run["eps_ladder"]:
        eps = math.exp(-r)
        ladder.append({"r": r, "n": n, "P": separated_P(cfg.m, f, n, eps), "Q": spanning_Q(cfg.m, f, n, eps)})
    body = {
        "window": list(est.window),
        "liminf_bracket": est.liminf_bracket,
        "limsup_bracket": est.limsup_bracket,
        "cauchy_gap": est.cauchy_gap,
        "s_N_hi": float(est.s_values[-1]),
        "ladder": ladder,
    }
    if not f.is_first_coord:
        rep = sbv_bound(f, run["sbv_n_max"])
        body["sbv"] = {"bound": rep.bound, "tail_nonincreasing": rep.tail_nonincreasing}
    code, msg = EXIT_OK, ""
    if run["critical"]:
        body["critical_s"], ok = _critical(cfg, f)
        if not ok:
            code, msg = EXIT_UNDETERMINED, "critical exponent undetermined at this depth"
    files = {f"{stem}.csv": _csv(cfg, est.to_csv()), f"{stem}_summary.json": _json(cfg, body)}
    return CommandResult(files, code, msg)


def cmd_pressure(cfg: RunConfig) -> CommandResult:
    return _pressure_like(cfg, cfg.f, "pressure")


def cmd_entropy(cfg: RunConfig) -> CommandResult:
    return _pressure_like(cfg, PotentialSeq.constant(cfg.m, 0.0), "entropy")


def cmd_measure(cfg: RunConfig) -> CommandResult:
    run = cfg.run
    mu = cfg.measure()
    est = measure_pressure_estimate(mu, cfg.f, run["N_hi"], run["N_lo"])
    ent = lln_diagnostic(mu, None, run["horizon"], run["samples"], run["seed"])
    prs = lln_diagnostic(mu, cfg.f, run["horizon"], run["samples"], run["seed"])
    body = {
        "window": list(est.window),
        "liminf_bracket": est.liminf_bracket,
        "limsup_bracket": est.limsup_bracket,
        "p_star": mu.p_star,
        "entropies": [entropy_H(p) for p in mu.vectors],
        "lln": {
            name: {"mean": st.mean, "expected": st.expected, "stderr": st.stderr, "verdict": st.verdict}
            for name, st in (("entropy", ent), ("pressure", prs))
        },
    }
    return CommandResult({"measure.csv": _csv(cfg, est.to_csv()), "measure_summary.json": _json(cfg, body)})


def cmd_equilibrium(cfg: RunConfig) -> CommandResult:
    run = cfg.run
    mu = equilibrium_from_potential(cfg.m, cfg.f, run["policy"])
    a = reduce_to_first_coord(cfg.f, run["policy"])
    resid = max(abs(equilibrium_identity_residual(mu, a, k)) for k in range(a.n_check_levels))
    est_mu = measure_pressure_estimate(mu, a, run["N_hi"], run["N_lo"])
    est_top = sn_sequence(cfg.m, cfg.f, run["N_hi"], run["policy"], run["N_lo"])
    proxy = pressure_proxy(a)
    n = run["gibbs_n"]
    worst = 0.0
    for i in range(min(run["samples"], 100)):
        lr = gibbs_log_ratios(mu, a, sample_path(mu, run["seed"], n, task=i), n, proxy)
        worst = max(worst, float(np.max(np.abs(np.expm1(lr)))))
    body = {
        "head": [p.tolist() for p in mu.head],
        "period": [p.tolist() for p in mu.period],
        "identity_residual": resid,
        "bracket_difference": max(
            abs(est_mu.liminf_bracket - est_top.liminf_bracket),
            abs(est_mu.limsup_bracket - est_top.limsup_bracket),
        ),
        "gibbs_max_deviation": worst,
        "gibbs_constant": gibbs_constant(mu, a, n, proxy),
    }
    return CommandResult({"equilibrium.json": _json(cfg, body)})


def cmd_code(cfg: RunConfig) -> CommandResult:
    run, sd = cfg.run, cfg.system
    dyn = cfg.dynamical_system()
    J, guard = sd["J"], sd["guard"]
    if isinstance(dyn, ShiftNDS):
        rng = rng_for(run["seed"], 0)
        sizes = np.array(cfg.m.sizes(0, J + 64))
        pairs = [
            (PointPrefix(0, (rng.integers(0, sizes) + 1).tolist()), PointPrefix(0, (rng.integers(0, sizes) + 1).tolist()))
            for _ in range(sd["pairs"])
        ]
        rep = expansiveness_falsifier(dyn, sd["delta"], J, pairs=pairs)
        meets = [meet_length(a, b, J + 64) for a, b in pairs]
        rows = ["pair,meet,separation_index"]
        rows += [f"{i},{mt},{sep}" for i, (mt, sep) in enumerate(zip(meets, rep.separation_index))]
        # at delta = 1/e a pair separates exactly where it first disagrees
        mismatch = sum(int(sep != mt) for mt, sep in zip(meets, rep.separation_index) if mt <= J)
        ladder = [math.exp(-r) for r in run["eps_ladder"]]
        sue = sue_modulus(dyn, sd["delta"], ladder)
        body = {
            "system": "shift",
            "falsifier": {"verdict": rep.verdict, "pairs": rep.n_pairs, "delta": sd["delta"], "J": J},
            "separation_equals_meet_mismatches": mismatch if math.isclose(sd["delta"], math.exp(-1)) else None,
            "sue_modulus": {repr(k): v for k, v in sue.moduli.items()},
        }
        return CommandResult({"code.csv": _csv(cfg, "\n".join(rows) + "\n"), "code_summary.json": _json(cfg, body)})

    rng = rng_for(run["seed"], 0)
    rows = ["point,x,word,residual,roundtrip_over_bound"]
    worst_res, worst_rt = 0.0, 0.0
    for i in range(sd["points"]):
        x = Fraction(int(rng.integers(0, 2**53)), 2**53)
        w = encode(dyn, x, J + guard)
        res = semiconjugacy_residual(dyn, w, J, guard)
        rt = float((x - decode(dyn, w, exact=True)) / decode_error_bound(dyn, w))
        worst_res, worst_rt = max(worst_res, res), max(worst_rt, rt)
        word = ".".join(str(s) for s in w.symbols)
        rows.append(f"{i},{float(x)!r},{word},{res!r},{rt!r}")
    body = {
        "system": "interval_expanding",
        "metric": dyn.metric,
        "max_semiconjugacy_residual": worst_res,
        "max_roundtrip_over_bound": worst_rt,
    }
    fal = expansiveness_falsifier(dyn, sd["delta"], J, grid=sd["grid"])
    body["falsifier"] = {"verdict": fal.verdict, "pairs": fal.n_pairs, "delta": sd["delta"], "J": J,
                         "witnesses": [[str(a), str(b)] for a, b in fal.witnesses]}
    if 0 < sd["eps"] < sd["delta"] / 4:
        cover = generator_from_net(dyn, sd["delta"], sd["eps"])
        gen = generator_check(dyn, cover, min(J, 12), seed=run["seed"])
        body["generator"] = {"members": len(cover), "passed": gen.passed, "max_diameter": max(gen.diameters),
                             "bound": gen.bound}
    sue = sue_modulus(dyn, sd["delta"], [sd["eps"]])
    body["sue_modulus"] = {repr(k): v for k, v in sue.moduli.items()}
    if dyn.metric == "circle":
        op = pressure_via_orbits(dyn, cfg.f, sd["orbit_n"], sd["orbit_eps"])
        s_n = float(sn_sequence(cfg.m, cfg.f, sd["orbit_n"], run["policy"]).s_values[-1])
        body["orbit_pressure"] = {"n": op.n, "eps": op.eps, "rate_Q": op.rate_Q, "rate_P": op.rate_P,
                                  "symbolic_s_n": s_n}
    return CommandResult({"code.csv": _csv(cfg, "\n".join(rows) + "\n"), "code_summary.json": _json(cfg, body)})


def cmd_verify(cfg: RunConfig, only: str | None, fault: str | None) -> CommandResult:
    names = list(verify_mod.PROPERTIES) if only is None else [s for s in only.split(",") if s.strip()]
    if not names:
        raise ConfigError("--only", "empty property selection")
    for name in names:
        if name not in verify_mod.PROPERTIES:
            raise ConfigError("--only", f"unknown property {name!r}; known: {sorted(verify_mod.PROPERTIES)}")
    if fault is not None and fault not in verify_mod.FAULTS:
        raise ConfigError("--inject-fault", f"unknown fault {fault!r}")
    results = verify_mod.run_suite(cfg, names, fault)
    body = {
        "fault": fault,
        "results": [{"name": r.name, "passed": r.passed, "detail": r.detail} for r in results],
    }
    failed = [r.name for r in results if not r.passed]
    code = EXIT_VERIFY if failed else EXIT_OK
    msg = f"failed: {', '.join(failed)}" if failed else ""
    return CommandResult({"verify.json": _json(cfg, body)}, code, msg)


def _parse_window(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        lo, hi = int(lo), int(hi)
    except ValueError:
        raise ConfigError("--window", f"expected LO..HI, got {text!r}") from None
    if not 1 <= lo <= hi:
        raise ConfigError("--window", "need 1 <= LO <= HI")
    return lo, hi


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, metavar="PATH", help="TOML configuration")
    common.add_argument("--out", default="out", metavar="DIR", help="output directory (default: out)")
    common.add_argument("--seed", type=int, default=None, metavar="U64", help="override run.seed")
    common.add_argument("--depth", type=int, default=None, metavar="N", help="override run.depth_max")
    common.add_argument("--window", default=None, metavar="LO..HI", help="override run.N_lo and run.N_hi")
    common.add_argument("--replay", action="store_true", help="recompute and compare with files in --out")
    parser = argparse.ArgumentParser(prog="nsdyn", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("pressure", "entropy", "measure", "equilibrium", "code"):
        sub.add_parser(name, parents=[common])
    v = sub.add_parser("verify", parents=[common])
    v.add_argument("--only", default=None, help="comma-separated property names")
    v.add_argument("--inject-fault", default=None, choices=None, help="deliberately break a property")
    return parser


def _emit(result: CommandResult, out_dir: str, replay: bool) -> int:
    if replay:
        for name, text in sorted(result.files.items()):
            path = os.path.join(out_dir, name)
            if not os.path.exists(path):
                print(f"replay mismatch: {path} does not exist", file=sys.stderr)
                return EXIT_VERIFY
            with open(path, encoding="utf-8") as fh:
                old = fh.read()
            found = re.search(r'config_sha256"?[=:] ?"?([0-9a-f]{64})', old)
            if found is None or found.group(1) != result.config_sha256:
                print(f"replay mismatch: {path} was produced by a different configuration", file=sys.stderr)
                return EXIT_VERIFY
            if old != text:
                print(f"replay mismatch: {path} differs", file=sys.stderr)
                return EXIT_VERIFY
        print("replay identical")
        return result.code
    os.makedirs(out_dir, exist_ok=True)
    for name, text in sorted(result.files.items()):
        with open(os.path.join(out_dir, name), "w", encoding="utf-8", newline="\n") as fh:
            fh.write(text)
        print(os.path.join(out_dir, name))
    return result.code


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        overrides = {"seed": args.seed, "depth_max": args.depth}
        if args.window is not None:
            overrides["N_lo"], overrides["N_hi"] = _parse_window(args.window)
        cfg = load_config(args.config, overrides)
        if args.command == "verify":
            result = cmd_verify(cfg, args.only, args.inject_fault)
            result.config_sha256 = cfg.sha256
        else:
            handler = {
                "pressure": cmd_pressure,
                "entropy": cmd_entropy,
                "measure": cmd_measure,
                "equilibrium": cmd_equilibrium,
                "code": cmd_code,
            }[args.command]
            result = handler(cfg)
        result.config_sha256 = cfg.sha256
    except ConfigError as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_CONFIG
    except HypothesisViolation as exc:
        print(f"hypothesis violated: {exc}", file=sys.stderr)
        return EXIT_HYPOTHESIS
    code = _emit(result, args.out, args.replay)
    if result.message:
        print(result.message, file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
