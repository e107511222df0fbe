"""Constraint qualification checks for nonlinear semidefinite programs.

Problems use the same JSON schema as the command-line tool. Reports,
verdicts and traces are returned as plain dicts and lists.
"""

import json

import numpy as np

from . import _core
from ._core import (
    DimensionError,
    EighError,
    NotFeasibleError,
    NsdpError,
    NumericError,
    ParseError,
    PreconditionError,
    Problem,
    corpus_ids,
    eigh,
    facial_reduce,
    kernel_basis,
    load_problem,
    parse_problem,
    proj_psd,
    vij,
)

CHECKERS = ("nondegeneracy", "robinson", "sparse_ndg", "forsgren")


def _point(x):
    return np.asarray(x, dtype=float).reshape(-1)


def corpus_entry(entry_id):
    """(problem, point) of a built-in example."""
    problem, point = _core.corpus_entry(entry_id)
    return problem, np.asarray(point)


def analyze(problem, x, seed=0, jobs=1, samples=200, traces=8):
    """Runs every checker at x and returns the report as a dict."""
    return json.loads(_core.analyze_json(problem, _point(x), seed, jobs, samples, traces))


def check(name, problem, x, seed=0, jobs=1):
    """One verdict dict for a checker in CHECKERS."""
    return json.loads(_core.check_json(name, problem, _point(x), seed, jobs))


def run_penalty(problem, anchor, rho0=1.0, rho_mult=10.0, outer_iters=12):
    """Outer penalty iterates as a list of dicts, plus the divergence flag."""
    lines, diverged = _core.penalty_jsonl(problem, _point(anchor), rho0, rho_mult, outer_iters)
    return [json.loads(line) for line in lines.splitlines() if line], diverged


def estimate_multiplier(problem, x):
    """Best PSD multiplier on the kernel of G(x) and its KKT residuals."""
    return json.loads(_core.kkt_json(problem, _point(x)))


__all__ = [
    "CHECKERS",
    "DimensionError",
    "EighError",
    "NotFeasibleError",
    "NsdpError",
    "NumericError",
    "ParseError",
    "PreconditionError",
    "Problem",
    "analyze",
    "check",
    "corpus_entry",
    "corpus_ids",
    "eigh",
    "estimate_multiplier",
    "facial_reduce",
    "kernel_basis",
    "load_problem",
    "parse_problem",
    "proj_psd",
    "run_penalty",
    "vij",
]
