"""Command-line front end.

Subcommands: `train` one policy, `sweep` a grid of entropy coefficients and
seeds with cross-play matrices, `landscape` objective surfaces for the
two-parameter shared policy, and `report` over a directory of saved
policies. Every run writes CSV files (the machine-readable contract, with a
first-line comment naming the tool version and config digest) next to PNG
renderings of the same numbers. Outputs carry no timestamps, so rerunning a
command with the same config writes byte-identical CSVs.

Exit codes: 0 on success, 2 for configuration problems (the message names
the offending dotted key), 1 for runtime failures.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import AppConfig, ConfigError, load_config
from .envs import build_env, env_digest
from .hashing import canonical_digest
from .evaluate import (
    PolicyGroup,
    block_average,
    build_report,
    sp_score,
    xp_matrix,
)
from .landscape import shared_policy_surface
from .plots import (
    save_block_heatmap,
    save_sp_xp_curve,
    save_surface_contour,
    save_xp_heatmap,
)
from .policy import load_policy, save_payload, save_policy
from .train import sweep_alpha, train
from .version import VERSION


def _out_dir(args) -> Path:
    out = args.out_dir or os.environ.get("XPLAB_OUT_DIR") or "."
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _stamp(app: AppConfig, extra: str = "") -> str:
    base = f"xplab {VERSION} config {app.digest()}"
    return f"{base} {extra}" if extra else base


def _say(path: Path) -> None:
    print(f"wrote {path}")


def _require(app: AppConfig, *sections: str) -> None:
    have = {
        "env": app.env is not None,
        "sweep": app.sweep is not None,
        "landscape": app.landscape is not None,
    }
    for section in sections:
        if not have[section]:
            raise ConfigError(f"{section}: required for this command")


def _load_app(args) -> AppConfig:
    if not args.config:
        raise ConfigError("--config: required for this command")
    app = load_config(args.config)
    if getattr(args, "games", None) is not None or getattr(args, "exact", None) is not None:
        ev = app.eval_settings
        exact = ev.exact if args.exact is None else args.exact
        games = ev.games if args.games is None else args.games
        if games < 1:
            raise ConfigError("--games: must be a positive integer")
        app.eval_settings = type(ev)(exact, games, ev.seed, ev.tie_epsilon)
    return app


# -- train ---------------------------------------------------------------------

def _cmd_train(args) -> None:
    app = _load_app(args)
    _require(app, "env")
    env = app.build_env()
    overrides = {} if args.seed is None else {"seed": args.seed}
    try:
        cfg = app.train_config(**overrides)
    except ValueError as exc:
        raise ConfigError(f"train: {exc}") from exc
    result = train(env, cfg)
    out = _out_dir(args)

    provenance = {
        "env_config": env.config,
        "env_digest": env_digest(env),
        "alpha": cfg.entropy_coefficient,
        "seed": cfg.seed,
        "train_config": cfg.to_dict(),
        "train_config_digest": cfg.digest(),
        "tool_version": VERSION,
    }
    _say(save_policy(result.policy, out / "policy.json", provenance))
    _say(result.log.to_csv(out / "training_log.csv",
                           comment=_stamp(app, f"train {cfg.digest()}")))

    greedy = result.policy.greedified(app.eval_settings.tie_epsilon)
    score = sp_score(env, greedy, app.eval_settings.mode())
    last = result.log.last()
    if last:
        print(f"final batch: sp_estimate={last[1]:.4f} mean_entropy={last[2]:.4f}")
    print(f"greedy self-play score: {score.value:.6f}")


# -- sweep ---------------------------------------------------------------------

def _cmd_sweep(args) -> None:
    app = _load_app(args)
    _require(app, "env", "sweep")
    env = app.build_env()
    sw = app.sweep
    master_seed = sw.master_seed if args.seed is None else args.seed
    if args.threads < 1:
        raise ConfigError("--threads: must be a positive integer")

    kwargs = dict(
        env_config=env.config,
        alphas=sw.alphas,
        seeds_per_alpha=sw.seeds_per_alpha,
        train_config=app.train,
        master_seed=master_seed,
        tie_epsilon=app.eval_settings.tie_epsilon,
    )
    if args.threads > 1:
        with ProcessPoolExecutor(max_workers=args.threads) as pool:
            result = sweep_alpha(**kwargs, mapper=pool.map)
    else:
        result = sweep_alpha(**kwargs)

    out = _out_dir(args)
    _say(result.to_csv(out / "sweep.csv",
                       comment=_stamp(app, f"master_seed {master_seed}")))

    policy_dir = out / "policies"
    policy_dir.mkdir(exist_ok=True)
    for ai in range(len(sw.alphas)):
        for si in range(sw.seeds_per_alpha):
            path = policy_dir / f"alpha{ai:02d}_seed{si:02d}.json"
            save_payload(result.policy_payloads[ai][si], path)
    print(f"wrote {policy_dir}/ ({len(sw.alphas) * sw.seeds_per_alpha} policies)")

    for ai, alpha in enumerate(sw.alphas):
        sps = [c.sp_greedy for c in result.cells[ai]]
        print(f"alpha={alpha:g}: greedy sp mean={np.mean(sps):.4f} "
              f"min={min(sps):.4f} max={max(sps):.4f}")

    if env.num_agents != 2:
        print("pairwise cross-play matrix skipped: "
              f"{env.name} has {env.num_agents} agents")
        return

    flat = [p for row in result.policies for p in row]
    labels = [f"a{ai}s{si}" for ai in range(len(sw.alphas))
              for si in range(sw.seeds_per_alpha)]
    matrix = xp_matrix(env, flat, app.eval_settings.mode(), labels,
                       tie_epsilon=app.eval_settings.tie_epsilon)
    _say(matrix.to_csv(out / "xp_matrix.csv", comment=_stamp(app)))
    _say(save_xp_heatmap(matrix, out / "xp_matrix.png",
                         title=f"{env.name}: greedy cross-play"))

    block = block_average(matrix.values, sw.seeds_per_alpha,
                          labels=[f"alpha={a:g}" for a in sw.alphas])
    block_path = out / "block_matrix.csv"
    with block_path.open("w", newline="") as fh:
        fh.write(f"# {_stamp(app)}\n")
        writer = csv.writer(fh)
        writer.writerow(["group", *block.labels, "sp_mean"])
        for gi, label in enumerate(block.labels):
            writer.writerow([label, *[repr(float(v)) for v in block.xp[gi]],
                             repr(float(block.sp[gi]))])
    _say(block_path)
    _say(save_block_heatmap(block.xp, block.sp, block.labels,
                            out / "block_matrix.png",
                            title=f"{env.name}: cross-play by entropy coefficient"))
    _say(save_sp_xp_curve(sw.alphas, block.sp, np.diagonal(block.xp),
                          out / "sp_xp_curve.png",
                          title=f"{env.name}: self-play vs cross-play"))


# -- landscape -------------------------------------------------------------------

def _cmd_landscape(args) -> None:
    app = _load_app(args)
    _require(app, "env", "landscape")
    env = app.build_env()
    ls = app.landscape
    out = _out_dir(args)
    for alpha in ls.alphas:
        grid = shared_policy_surface(env, alpha, ls.theta1.build(), ls.theta2.build())
        stem = f"surface_alpha_{alpha:g}"
        _say(grid.to_csv(out / f"{stem}.csv", comment=_stamp(app, f"alpha {alpha:g}")))
        _say(save_surface_contour(grid, out / f"{stem}.png",
                                  title=f"{env.name}: objective surface, alpha={alpha:g}"))
        t1, t2, value = grid.argmax()
        print(f"alpha={alpha:g}: grid argmax at theta1={t1:g}, theta2={t2:g} "
              f"(value {value:.6f})")


# -- report ----------------------------------------------------------------------

def _load_policy_dir(policies_dir: Path):
    files = sorted(policies_dir.glob("*.json"))
    if not files:
        raise ConfigError(f"{policies_dir}: no .json policy files found")
    loaded = []
    for path in files:
        try:
            policy, provenance = load_policy(path)
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            raise RuntimeError(f"policy file '{path.name}' is unreadable: {exc}") from exc
        loaded.append((path, policy, provenance or {}))
    return loaded


def _report_env(app: AppConfig | None, loaded):
    """Pick the evaluation environment and reject mixed training environments."""
    first_digest = None
    first_name = None
    env_config = None
    for path, _, provenance in loaded:
        digest = provenance.get("env_digest")
        if digest is None:
            continue
        if first_digest is None:
            first_digest, first_name = digest, path.name
            env_config = provenance.get("env_config")
        elif digest != first_digest:
            raise RuntimeError(
                f"policy file '{path.name}' was trained on a different "
                f"environment than '{first_name}'; report them separately"
            )
    if app is not None and app.env is not None:
        env = build_env(app.env)
        if first_digest is not None and env_digest(env) != first_digest:
            raise RuntimeError(
                "the config's environment differs from the one the policies "
                f"were trained on (first policy: '{first_name}')"
            )
        return env
    if env_config is None:
        raise ConfigError(
            "report: the policy files carry no environment provenance; pass "
            "--config with an 'env' section"
        )
    return build_env(env_config)


def _recipe_digest(provenance):
    """Digest of the training config with the seed removed: seeds of the same
    recipe belong to one group, whose within-group cross-play measures seed
    consistency."""
    cfg = provenance.get("train_config")
    if isinstance(cfg, dict):
        return canonical_digest({k: v for k, v in cfg.items() if k != "seed"})
    return provenance.get("train_config_digest")


def _group_policies(loaded):
    """Group by (alpha, seedless training-config digest), ordered by alpha."""
    keys = []
    by_key = {}
    for path, policy, provenance in loaded:
        key = (provenance.get("alpha"), _recipe_digest(provenance))
        if key not in by_key:
            by_key[key] = []
            keys.append(key)
        by_key[key].append(policy)

    def order(key):
        alpha = key[0]
        return (alpha is None, alpha if alpha is not None else 0.0, str(key[1]))

    keys.sort(key=order)
    groups = []
    seen_labels: dict[str, int] = {}
    for alpha, digest in keys:
        label = f"alpha={alpha:g}" if alpha is not None else "ungrouped"
        seen_labels[label] = seen_labels.get(label, 0) + 1
        if seen_labels[label] > 1:
            label = f"{label}#{seen_labels[label]}"
        groups.append(PolicyGroup(label, alpha, by_key[(alpha, digest)]))
    return groups


def _cmd_report(args) -> None:
    app = _load_app(args) if args.config else None
    loaded = _load_policy_dir(Path(args.policies))
    env = _report_env(app, loaded)
    groups = _group_policies(loaded)
    settings = app.eval_settings if app else None
    if settings is None:
        from .config import EvalSettings

        settings = EvalSettings()
        if args.exact is not None or args.games is not None:
            settings = EvalSettings(
                exact=settings.exact if args.exact is None else args.exact,
                games=settings.games if args.games is None else args.games,
            )
    report = build_report(env, groups, settings.mode(),
                          tie_epsilon=settings.tie_epsilon)
    out = _out_dir(args)

    stamp = (f"xplab {VERSION} report on {env.name} "
             f"({sum(report.group_sizes)} policies)")
    summary_path = out / "report_sp_xp.csv"
    with summary_path.open("w", newline="") as fh:
        fh.write(f"# {stamp}\n")
        for note in report.notes:
            fh.write(f"# note: {note}\n")
        writer = csv.writer(fh)
        writer.writerow(["group", "alpha", "policies", "sp_mean", "xp_within",
                         "team_mean", "team_std", "team_stderr", "team_count"])
        for gi, label in enumerate(report.group_labels):
            team = report.teams[gi]
            writer.writerow([
                label,
                "" if report.alphas[gi] is None else repr(report.alphas[gi]),
                report.group_sizes[gi],
                repr(float(report.sp_means[gi])),
                repr(float(report.xp_between[gi, gi])),
                repr(team.mean) if team else "",
                repr(team.std) if team else "",
                repr(team.stderr) if team else "",
                team.count if team else "",
            ])
    _say(summary_path)

    if report.matrix is not None:
        _say(report.matrix.to_csv(out / "report_matrix.csv", comment=stamp))
        _say(save_xp_heatmap(report.matrix, out / "report_matrix.png",
                             title=f"{env.name}: pairwise cross-play"))
        _say(save_block_heatmap(report.xp_between, report.sp_means,
                                report.group_labels, out / "report_blocks.png",
                                title=f"{env.name}: cross-play by group"))
    alphas = [a for a in report.alphas if a is not None]
    if len(alphas) == len(report.alphas) and len(alphas) > 1:
        _say(save_sp_xp_curve(alphas, report.sp_means,
                              np.diagonal(report.xp_between),
                              out / "report_curve.png",
                              title=f"{env.name}: self-play vs cross-play"))
    for note in report.notes:
        print(f"note: {note}")


# -- argument parsing --------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="xplab",
        description="Train, sweep, and cross-play tabular policies on small "
                    "cooperative games.",
    )
    parser.add_argument("--version", action="version", version=f"xplab {VERSION}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        p.add_argument("--config", required=False,
                       help="JSON config file" + ("" if needs_config else " (optional)"))
        p.add_argument("--out-dir", default=None,
                       help="output directory (default: $XPLAB_OUT_DIR or '.')")
        p.add_argument("--seed", type=int, default=None,
                       help="override the config's seed")
        p.add_argument("--games", type=int, default=None,
                       help="override eval.games for Monte Carlo scoring")
        p.add_argument("--exact", action=argparse.BooleanOptionalAction,
                       default=None, help="force exact (or sampled) scoring")

    p_train = sub.add_parser("train", help="train one policy and save it")
    common(p_train)
    p_train.set_defaults(func=_cmd_train)

    p_sweep = sub.add_parser(
        "sweep", help="train seeds at each entropy coefficient and cross-play them")
    common(p_sweep)
    p_sweep.add_argument("--threads", type=int, default=1,
                         help="worker processes for training cells")
    p_sweep.set_defaults(func=_cmd_sweep)

    p_land = sub.add_parser(
        "landscape", help="objective surfaces for the shared two-parameter policy")
    common(p_land)
    p_land.set_defaults(func=_cmd_landscape)

    p_report = sub.add_parser(
        "report", help="cross-play report over a directory of saved policies")
    p_report.add_argument("policies", help="directory of policy .json files")
    common(p_report, needs_config=False)
    p_report.set_defaults(func=_cmd_report)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except Exception as exc:  # noqa: BLE001 - the CLI boundary reports, not raises
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
