"""Command-line interface: coxcells {info,kl,mu,cells,dinv,verify}."""

from __future__ import annotations

import argparse
import logging
import os
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

from .cells import (
    ball_mu_pairs,
    build_mu_graph,
    cell_partition,
    dinv_bruteforce,
    to_dot,
)
from .conjectures import Engine, verify_suite
from .coxeter import (
    CoxeterGroup,
    CoxeterInputError,
    ResourceLimitError,
    classify_parabolic,
    enumerate_ball,
    finite_parabolics,
)
from .hecke import AFunction, ArithmeticRangeError
from .kl import CacheError, KLTable
from .store import Manifest, canonical_json, load_group, write_text

log = logging.getLogger("coxcells")

EXIT_OK, EXIT_VIOLATION, EXIT_INPUT, EXIT_RESOURCE = 0, 1, 2, 3


@dataclass
class JobConfig:
    group_file: str
    radius: int = 8
    margin: int = 2
    max_len: int = 12
    cache_path: str | None = None
    a_bound_override: int | None = None
    output: str | None = None
    format: str = "json"
    workers: int = 1

    def validate(self) -> None:
        if self.margin < 0 or self.radius < self.margin:
            raise CoxeterInputError("need radius >= margin >= 0")
        if self.max_len < 0:
            raise CoxeterInputError("max_len must be >= 0")
        if self.format not in ("json", "dot", "text"):
            raise CoxeterInputError("format must be json, dot or text")


class Job:
    """Group, KL table and a-function shared by one command."""

    def __init__(self, cfg: JobConfig, command: str):
        cfg.validate()
        self.cfg = cfg
        self.system = load_group(cfg.group_file)
        self.group = CoxeterGroup(self.system)
        self.table = KLTable(self.group)
        self.manifest = Manifest(command, asdict(cfg))
        if cfg.cache_path and Path(cfg.cache_path).exists():
            t0 = time.perf_counter()
            n = self.table.load(cfg.cache_path)
            self.manifest.time("cache_load", t0)
            log.info("loaded %d KL records from %s", n, cfg.cache_path)
        self.afunc = AFunction(self.table)
        self._engine = None

    @property
    def engine(self) -> Engine:
        if self._engine is None:
            self._engine = Engine(self.table, self.afunc)
        return self._engine

    @property
    def finite(self) -> bool:
        return classify_parabolic(self.system, range(self.system.rank)).finite

    def parse(self, text: str) -> int:
        return self.group.parse(text)

    def emit(self, payload, text: str | None = None) -> None:
        """Write to --output (plus manifest) or stdout."""
        cfg = self.cfg
        body = text if text is not None else canonical_json(payload)
        if cfg.cache_path:
            self.table.save(cfg.cache_path)
        self.manifest.cache = self.table.stats.as_dict(len(self.table))
        if cfg.output:
            write_text(cfg.output, body)
            self.manifest.outputs.append(str(cfg.output))
            self.manifest.write(cfg.output)
        else:
            sys.stdout.write(body)


# --- commands -------------------------------------------------------------------


def cmd_info(job: Job, args) -> int:
    sys_ = job.system
    G = job.group
    fin = []
    for sub in finite_parabolics(sys_, maximal_only=False):
        spec = classify_parabolic(sys_, sub)
        fin.append({"generators": sys_.format_word(sorted(sub)), "type": spec.type_label,
                    "order": int(spec.order)})
    whole = classify_parabolic(sys_, range(sys_.rank))
    df = job.engine.df_set()
    out = {
        "name": sys_.name, "rank": sys_.rank, "labels_from": sys_.labels_from,
        "fingerprint": sys_.fingerprint(), "crystallographic": sys_.is_crystallographic(),
        "finite": whole.finite, "order": int(whole.order) if whole.finite else None,
        "type": whole.type_label if whole.finite else None,
        "finite_parabolics": fin,
        "D_f": [G.format(z) for z in G.sort(df)],
        "D_f_bullet": [G.format(z) for z in job.engine.df_strict()],
    }
    job.emit(out)
    return EXIT_OK


def cmd_kl(job: Job, args) -> int:
    y, w = job.parse(args.y), job.parse(args.w)
    p = job.table.P(y, w)
    out = {"y": job.group.format(y), "w": job.group.format(w), "P": p.render_q(),
           "q_coefficients": list(job.table.p_q(y, w))}
    job.emit(out, None if job.cfg.format == "json" else p.render_q() + "\n")
    return EXIT_OK


def cmd_mu(job: Job, args) -> int:
    y, w = job.parse(args.y), job.parse(args.w)
    m = job.table.mu(y, w)
    out = {"y": job.group.format(y), "w": job.group.format(w), "mu": m}
    job.emit(out, None if job.cfg.format == "json" else f"{m}\n")
    return EXIT_OK


def _ball(job: Job):
    return enumerate_ball(job.group, job.cfg.radius)


def cmd_cells(job: Job, args) -> int:
    G = job.group
    t0 = time.perf_counter()
    ball = _ball(job)
    pairs = ball_mu_pairs(job.table, ball)
    graph = build_mu_graph(job.table, ball, args.side, pairs)
    part = cell_partition(graph, job.cfg.margin)
    job.manifest.time("cells", t0)
    payload = part.to_json(G)
    payload["nontrivial_certified_blocks"] = sum(1 for b in part.certified_blocks() if b != [0])
    if args.reconstruct and args.side != "two-sided":
        recon, info = job.engine.reconstruct_cells(ball, part, side=args.side)
        payload["reconstruction"] = info["report"]
        job.manifest.time("reconstruct", t0)
    if args.plot:
        from .plotting import plot_cells

        job.manifest.outputs.append(str(plot_cells(G, part, args.plot)))
    if job.cfg.format == "dot":
        job.emit(payload, to_dot(graph, part))
    elif job.cfg.format == "text":
        lines = [f"{'*' if any(w in part.certified for w in b) else ' '} " + " | ".join(G.format(w) for w in b)
                 for b in part.blocks]
        job.emit(payload, "\n".join(lines) + "\n")
    else:
        job.emit(payload)
    return EXIT_OK


def cmd_dinv(job: Job, args) -> int:
    G = job.group
    eng = job.engine
    t0 = time.perf_counter()
    out: dict = {"mode": args.mode}
    records = []
    if args.mode in ("generate", "compare"):
        seeds = [job.parse(s) for s in args.seed] if args.seed else None
        gen = eng.conj1_generate(job.cfg.max_len, gate=args.gate, seeds=seeds,
                                 lower_bounds=not args.no_lower_bounds)
        records = gen.records
        out["generated"] = [r.to_json(G) for r in gen.records]
        out["terminated"] = gen.terminated
        out["D_f"] = [G.format(z) for z in G.sort(eng.df_set())]
        out["rejections"] = [
            {"state_x": G.format(rj.state[0]), "base": G.format(rj.state[1]),
             "s": G.system.format_word([rj.s]), "reason": rj.reason,
             "rigidity": rj.report.to_json(G) if rj.report else None}
            for rj in gen.rejections if rj.report is not None
        ]
    if args.mode in ("bruteforce", "compare"):
        ball = _ball(job)
        scope = "finite" if job.finite else "ball"
        brute = dinv_bruteforce(job.table, ball, job.afunc, scope,
                                a_lower=eng.a_lower_factor, a_prime=lambda z: eng.a_prime(z).value)
        out["bruteforce"] = [r.to_json(G) for r in brute]
        if args.mode == "bruteforce":
            records = brute
    if args.mode == "compare":
        members = {r.element for r in brute if r.verdict.startswith("member")}
        predicted = {r.element for r in records if G.length(r.element) <= job.cfg.radius} | {
            z for z in eng.df_set() if G.length(z) <= job.cfg.radius}
        out["compare"] = {"agree": members == predicted,
                          "only_bruteforce": [G.format(z) for z in G.sort(members - predicted)],
                          "only_generated": [G.format(z) for z in G.sort(predicted - members)]}
    job.manifest.time("dinv", t0)
    if args.plot:
        from .plotting import plot_dinv

        job.manifest.outputs.append(str(plot_dinv(records, args.plot)))
    job.emit(out)
    if args.mode == "compare" and not out["compare"]["agree"]:
        return EXIT_VIOLATION
    return EXIT_OK


def cmd_verify(job: Job, args) -> int:
    which = ("conj1", "conj2", "conj3", "positivity") if args.which == "all" else (args.which,)
    t0 = time.perf_counter()
    report = verify_suite(job.engine, job.cfg.radius, which, margin=job.cfg.margin,
                          max_len=job.cfg.max_len, h_radius=args.h_radius,
                          conj3_radius=args.conj3_radius, progress=lambda m: log.info("%s", m))
    job.manifest.time("verify", t0)
    job.emit(report)
    return EXIT_VIOLATION if report["status"] == "violation" else EXIT_OK


COMMANDS = {"info": cmd_info, "kl": cmd_kl, "mu": cmd_mu, "cells": cmd_cells,
            "dinv": cmd_dinv, "verify": cmd_verify}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="coxcells", description="Kazhdan-Lusztig cells and distinguished involutions.")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1,
                   help="concurrency cap (recorded; computations run in one thread)")
    p.add_argument("--cache", dest="cache_path", help="KL cache file, loaded if present and saved after the run")
    p.add_argument("--output", "-o", help="output file; a .manifest.json is written beside it")
    p.add_argument("--format", default="json", choices=("json", "dot", "text"))
    p.add_argument("--log-level", default="WARNING")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, radius=8):
        sp.add_argument("group", help="group JSON file or bundled fixture name")
        sp.add_argument("--radius", type=int, default=radius)
        sp.add_argument("--margin", type=int, default=2)
        sp.add_argument("--max-len", type=int, default=12)
        sp.add_argument("--a-bound", type=int, dest="a_bound_override")

    common(sub.add_parser("info", help="rank, finite parabolics, D_f"))
    for name in ("kl", "mu"):
        sp = sub.add_parser(name, help=f"{'P(y, w)' if name == 'kl' else 'mu(y, w)'}")
        common(sp)
        sp.add_argument("y")
        sp.add_argument("w")
    sp = sub.add_parser("cells", help="cells on a ball")
    common(sp)
    sp.add_argument("--side", default="right", choices=("left", "right", "two-sided"))
    sp.add_argument("--reconstruct", action="store_true", help="also rebuild the cells from certified edges")
    sp.add_argument("--plot", help="PNG path for a block/length figure")
    sp = sub.add_parser("dinv", help="distinguished involutions")
    common(sp)
    sp.add_argument("--mode", default="generate", choices=("bruteforce", "generate", "compare"))
    sp.add_argument("--gate", default="conj1", choices=("conj1", "thm1"))
    sp.add_argument("--seed", action="append", help="seed word (repeatable); default D_f bullet")
    sp.add_argument("--no-lower-bounds", action="store_true")
    sp.add_argument("--plot", help="PNG path for a length/verdict histogram")
    sp = sub.add_parser("verify", help="conjecture consistency checks")
    common(sp)
    sp.add_argument("--which", default="all", choices=("conj1", "conj2", "conj3", "positivity", "all"))
    sp.add_argument("--h-radius", type=int, default=3)
    sp.add_argument("--conj3-radius", type=int)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=getattr(logging, str(args.log_level).upper(), logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")
    cfg = JobConfig(args.group, args.radius, args.margin, args.max_len, args.cache_path,
                    args.a_bound_override, args.output, args.format, args.workers)
    try:
        job = Job(cfg, args.command)
        return COMMANDS[args.command](job, args)
    except (CoxeterInputError, CacheError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except (ResourceLimitError, ArithmeticRangeError, MemoryError) as exc:
        print(f"abstained: {exc}", file=sys.stderr)
        return EXIT_RESOURCE


if __name__ == "__main__":
    sys.exit(main())
