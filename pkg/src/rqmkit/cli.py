"""Batch front-end: run verification commands from a problem file.

Usage::

    rqmkit <command> <spec.json> [--out report.json] [--seed N]
           [--tolerance X] [--dim-cap N] [--depth N]

``<command>`` selects the matching entries of the file's ``commands`` list
("run" executes all of them in declaration order; "validate" with no entries
re-validates every declared object).  The human-readable summary goes to
standard output; ``--out`` writes a machine report whose bytes depend only on
the problem file and the seed.  Exit codes: 0 all checks pass, 1 at least one
check failed, 2 malformed problem file, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import sys
import time
from typing import Any, Callable

import numpy as np

from .algebra import State, state_from_probabilities
from .chain import (
    ChainSpec,
    build_chain,
    check_stationarity,
    verify_markov,
)
from .classical import (
    ClassicalRandomMap,
    Kernel,
    chain_marginal,
    commutative_algebra,
    implement_kernel,
    kernel_of_random_map,
    lift_random_map,
    map_of_kernel,
)
from .errors import NumericalFailureError, RqmError, SpecFormatError
from .invariant import invariant_states, verify_skew_invariance
from .maps import LinearMap, compose, direct_sum_map, tensor_map, validate_cp_unital
from .rand import random_element, random_state
from .rqm import (
    RandomQuantumMap,
    implement_composition,
    implement_convex_combination,
    implement_direct_sum,
    implement_finite_family,
    implement_from_dilation,
    implement_morphism,
    implement_state,
    implement_tensor,
    induced_cp_map,
    induced_transition,
)
from .spec_io import (
    SCHEMA_VERSION,
    Problem,
    load_problem,
    map_to_json,
    rqm_to_json,
    state_to_json,
)

COMMANDS = (
    "validate",
    "induce",
    "compose",
    "implement",
    "chain",
    "markov",
    "stationarity",
    "invariant",
    "skew",
    "classical",
    "probe-implementability",
    "run",
)


def _check(check_id: str, passed: bool, residual=None, detail=None) -> dict:
    out: dict[str, Any] = {"id": check_id, "pass": bool(passed)}
    if residual is not None:
        out["residual"] = float(residual)
    if detail is not None:
        out["detail"] = detail
    return out


def _resolve_name(problem: Problem, name, expected, where: str):
    if not isinstance(name, str) or name not in problem.objects:
        raise SpecFormatError(f"{where}: unresolved reference {name!r}")
    obj = problem.objects[name]
    if not isinstance(obj, expected):
        raise SpecFormatError(f"{where}: {name!r} is a {type(obj).__name__}")
    return obj


def _resolve(problem: Problem, entry: dict, key: str, expected):
    return _resolve_name(problem, entry.get(key), expected, f"command field {key!r}")


def _run_validate(entry, problem, settings, rng):
    checks = []
    names = [entry["object"]] if "object" in entry else list(problem.objects)
    for name in names:
        if name not in problem.objects:
            raise SpecFormatError(f"validate: unresolved reference {name!r}")
        obj = problem.objects[name]
        checks.append(
            _check(f"validate.{type(obj).__name__.lower()}", True, detail=name)
        )
    return checks, {}


def _run_induce(entry, problem, settings, rng):
    rqm = _resolve(problem, entry, "rqm", RandomQuantumMap)
    tol = settings["tolerance"]
    induced = induced_cp_map(rqm, tol)
    checks = [_check("induced.cp_unital", True)]
    transition = induced_transition(rqm)
    worst = 0.0
    for _ in range(5):
        rho = random_state(rqm.target, rng)
        b = random_element(rqm.domain, rng)
        lhs = transition(rho).evaluate(b)
        rhs = rho.evaluate(induced(b))
        worst = max(worst, abs(lhs - rhs))
    checks.append(_check("induced.duality", worst <= tol, worst))
    return checks, {"induced_map": map_to_json(induced)}


def _run_compose(entry, problem, settings, rng):
    first = _resolve(problem, entry, "first", RandomQuantumMap)
    second = _resolve(problem, entry, "second", RandomQuantumMap)
    tol = settings["tolerance"]
    composed = implement_composition(first, second, tol)
    f_first = induced_cp_map(first, tol)
    f_second = induced_cp_map(second, tol)
    map_residual = float(
        np.abs(induced_cp_map(composed, tol).mat - f_first.mat @ f_second.mat).max()
    )
    checks = [_check("chapman_kolmogorov.map", map_residual <= tol, map_residual)]
    t_comp = induced_transition(composed)
    t1, t2 = induced_transition(first), induced_transition(second)
    worst = 0.0
    for _ in range(10):
        rho = random_state(first.target, rng)
        via = t2(t1(rho))
        direct = t_comp(rho)
        worst = max(
            worst,
            max(np.abs(a - b).max() for a, b in zip(via.densities, direct.densities)),
        )
    checks.append(_check("chapman_kolmogorov.transition", worst <= tol, worst))
    return checks, {"composed": rqm_to_json(composed)}


def _run_implement(entry, problem, settings, rng):
    tol = settings["tolerance"]
    kind = entry.get("kind")
    if kind == "state":
        sigma = _resolve(problem, entry, "state", State)
        rqm = implement_state(sigma)
        target_mat = sigma.functional_vector().reshape(1, -1)
    elif kind == "morphism":
        phi = _resolve(problem, entry, "morphism", LinearMap)
        rqm = implement_morphism(phi, tol)
        target_mat = phi.mat
    elif kind in ("compose", "direct_sum", "tensor"):
        first = _resolve(problem, entry, "first", RandomQuantumMap)
        second = _resolve(problem, entry, "second", RandomQuantumMap)
        builder = {
            "compose": implement_composition,
            "direct_sum": implement_direct_sum,
            "tensor": implement_tensor,
        }[kind]
        rqm = builder(first, second, tol)
        f1, f2 = induced_cp_map(first, tol), induced_cp_map(second, tol)
        combiner = {
            "compose": lambda: f1.mat @ f2.mat,
            "direct_sum": lambda: direct_sum_map(f1, f2).mat,
            "tensor": lambda: tensor_map(f1, f2).mat,
        }[kind]
        target_mat = combiner()
    elif kind == "convex_sum":
        weights = entry.get("weights")
        names = entry.get("rqms")
        if not isinstance(weights, list) or not isinstance(names, list):
            raise SpecFormatError("convex_sum needs 'weights' and 'rqms' lists")
        rqms = [
            _resolve_name(problem, n, RandomQuantumMap, "implement.rqms") for n in names
        ]
        rqm = implement_convex_combination(weights, rqms, tol)
        target_mat = sum(
            w * induced_cp_map(r, tol).mat for w, r in zip(weights, rqms)
        )
    elif kind == "finite_family":
        weights = entry.get("weights")
        names = entry.get("morphisms")
        if not isinstance(weights, list) or not isinstance(names, list):
            raise SpecFormatError("finite_family needs 'weights' and 'morphisms' lists")
        morphisms = [
            _resolve_name(problem, n, LinearMap, "implement.morphisms") for n in names
        ]
        rqm = implement_finite_family(morphisms, weights, tol)
        target_mat = sum(w * f.mat for w, f in zip(weights, morphisms))
    else:
        raise SpecFormatError(f"implement: unknown kind {kind!r}")
    residual = float(np.abs(induced_cp_map(rqm, tol).mat - target_mat).max())
    checks = [_check("implement.matches_target", residual <= tol, residual)]
    return checks, {"rqm": rqm_to_json(rqm)}


def _run_chain(entry, problem, settings, rng):
    spec = _resolve(problem, entry, "chain", ChainSpec)
    tol = settings["tolerance"]
    chain = build_chain(spec, dim_cap=settings["dim_cap"], tol=tol)
    checks = [_check("chain.steps_validated", True, detail=f"depth {chain.depth}")]
    worst = 0.0
    for n in range(chain.depth):
        embed = chain.embeddings[n]
        for x in chain.levels[n].basis():
            worst = max(
                worst,
                abs(chain.states[-1].evaluate(embed(x)) - chain.states[n].evaluate(x)),
            )
    checks.append(_check("chain.truncation_consistency", worst <= 1e-12, worst))
    return checks, {"level_blocks": [list(a.blocks) for a in chain.levels]}


def _run_markov(entry, problem, settings, rng):
    spec = _resolve(problem, entry, "chain", ChainSpec)
    level = entry.get("level", 0)
    tol = settings["tolerance"]
    chain = build_chain(spec, dim_cap=settings["dim_cap"], tol=tol)
    report = verify_markov(chain, int(level), tol)
    checks = [
        _check("markov.module_property", report.module_residual <= tol,
               report.module_residual),
        _check("markov.state_compatibility", report.compatibility_residual <= tol,
               report.compatibility_residual),
        _check("markov.containment", report.containment_residual <= tol,
               report.containment_residual),
    ]
    return checks, {"level": int(level)}


def _run_stationarity(entry, problem, settings, rng):
    spec = _resolve(problem, entry, "chain", ChainSpec)
    tol = settings["tolerance"]
    chain = build_chain(spec, dim_cap=settings["dim_cap"], tol=tol)
    report = check_stationarity(
        chain,
        int(entry.get("r_max", 2)),
        int(entry.get("l_max", 1)),
        tol=tol,
        seed=settings["seed"],
    )
    checks = [
        _check("stationarity.shift_invariance", report.passed, report.max_violation)
    ]
    products = {
        "violations": {f"r{r}_l{l}": v for (r, l), v in sorted(report.violations.items())},
        "words_checked": report.words_checked,
        "exhaustive": report.exhaustive,
    }
    return checks, products


def _run_invariant(entry, problem, settings, rng):
    rqm = _resolve(problem, entry, "rqm", RandomQuantumMap)
    tol = settings["tolerance"]
    report = invariant_states(rqm, tol)
    checks = [
        _check("invariant.fixed_point", report.residual <= tol, report.residual),
        _check("invariant.nonempty", report.fixed_dim >= 1,
               detail=f"fixed_dim {report.fixed_dim}"),
    ]
    products = {
        "fixed_dim": report.fixed_dim,
        "canonical": state_to_json(report.canonical),
        "iterations": report.iterations,
    }
    return checks, products


def _run_skew(entry, problem, settings, rng):
    rqm = _resolve(problem, entry, "rqm", RandomQuantumMap)
    sigma = _resolve(problem, entry, "state", State)
    depth = int(entry.get("depth", settings["depth"]))
    tol = settings["tolerance"]
    report = verify_skew_invariance(rqm, sigma, depth, tol)
    checks = [
        _check("skew.pullback_identity", report.unconditional_residual <= tol,
               report.unconditional_residual),
        _check("skew.invariance", report.passed, report.max_violation),
    ]
    products = {"invariant_residual": report.invariant_residual, "depth": depth}
    return checks, products


def _run_classical(entry, problem, settings, rng):
    tol = settings["tolerance"]
    checks = []
    products: dict[str, Any] = {}
    if "kernel" in entry:
        kernel = _resolve(problem, entry, "kernel", Kernel)
        witness = implement_kernel(kernel)
        back = kernel_of_random_map(witness)
        residual = float(np.abs(back.matrix - kernel.matrix).max())
        checks.append(_check("classical.kernel_roundtrip", residual <= tol, residual))
        products["parameter_points"] = witness.z.size
        return checks, products
    cmap = _resolve(problem, entry, "random_map", ClassicalRandomMap)
    lifted = lift_random_map(cmap, tol)
    kernel_map = map_of_kernel(kernel_of_random_map(cmap), tol)
    residual = float(np.abs(induced_cp_map(lifted, tol).mat - kernel_map.mat).max())
    checks.append(_check("classical.lift_agrees", residual <= tol, residual))
    if cmap.x.size == cmap.y.size:
        steps = int(entry.get("steps", 2))
        sigma = entry.get("initial")
        sigma = (
            [1.0 / cmap.x.size] * cmap.x.size if sigma is None else list(sigma)
        )
        kernel = kernel_of_random_map(cmap)
        classical_dist = chain_marginal([kernel] * steps, sigma, steps)
        state = state_from_probabilities(commutative_algebra(cmap.x.size), sigma)
        transition = induced_transition(lifted)
        for _ in range(steps):
            state = transition(state)
        quantum_dist = np.array(
            [state.densities[i][0, 0].real for i in range(cmap.x.size)]
        )
        marg_residual = float(np.abs(quantum_dist - classical_dist).max())
        checks.append(_check("classical.marginals", marg_residual <= tol, marg_residual))
        products["marginal"] = [float(v) for v in classical_dist]
    return checks, products


def _run_probe(entry, problem, settings, rng):
    target = _resolve(problem, entry, "map", LinearMap)
    tol = settings["tolerance"]
    report = implement_from_dilation(validate_cp_unital(target, tol), tol)
    checks = [
        _check(
            "implement.witness_found",
            report.succeeded,
            report.residual,
            detail=report.message,
        )
    ]
    products: dict[str, Any] = {
        "k_dim": report.k_dim,
        "copies": report.copies,
        "padding": report.padding,
        "unreachable": list(report.unreachable),
    }
    if report.rqm is not None:
        products["witness"] = rqm_to_json(report.rqm)
    return checks, products


_RUNNERS: dict[str, Callable] = {
    "validate": _run_validate,
    "induce": _run_induce,
    "compose": _run_compose,
    "implement": _run_implement,
    "chain": _run_chain,
    "markov": _run_markov,
    "stationarity": _run_stationarity,
    "invariant": _run_invariant,
    "skew": _run_skew,
    "classical": _run_classical,
    "probe-implementability": _run_probe,
}


def _select_entries(problem: Problem, command: str) -> list[dict]:
    if command == "run":
        return list(problem.commands)
    entries = [e for e in problem.commands if e.get("command") == command]
    if not entries and command == "validate":
        entries = [{"command": "validate"}]
    if not entries:
        raise SpecFormatError(
            f"problem file declares no {command!r} commands"
        )
    return entries


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="rqmkit",
        description="Verify random-quantum-map identities from a JSON problem file.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("spec", help="path to the problem JSON file")
    parser.add_argument("--out", help="write the machine report to this path")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--tolerance", type=float, default=1e-9)
    parser.add_argument("--dim-cap", type=int, default=2**24)
    parser.add_argument("--depth", type=int, default=3)
    args = parser.parse_args(argv)

    settings = {
        "tolerance": args.tolerance,
        "seed": args.seed,
        "dim_cap": args.dim_cap,
        "depth": args.depth,
    }

    try:
        problem = load_problem(args.spec, tol=args.tolerance)
        entries = _select_entries(problem, args.command)
    except SpecFormatError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2
    except RqmError as exc:
        print(f"spec error: {exc}", file=sys.stderr)
        return 2

    results = []
    overall_pass = True
    for index, entry in enumerate(entries):
        name = entry.get("command")
        runner = _RUNNERS.get(name)
        if runner is None:
            print(f"spec error: unknown command {name!r}", file=sys.stderr)
            return 2
        rng = np.random.default_rng([args.seed, index])
        started = time.perf_counter()
        try:
            checks, products = runner(entry, problem, settings, rng)
        except SpecFormatError as exc:
            print(f"spec error: {exc}", file=sys.stderr)
            return 2
        except NumericalFailureError as exc:
            print(f"numerical failure in command {index} ({name}): {exc}",
                  file=sys.stderr)
            return 3
        except RqmError as exc:
            # A domain error while executing a well-formed command is a failed check.
            checks = [_check(f"{name}.error", False, detail=str(exc))]
            products = {}
        elapsed_ms = 1000.0 * (time.perf_counter() - started)
        entry_pass = all(c["pass"] for c in checks)
        overall_pass = overall_pass and entry_pass
        results.append(
            {
                "index": index,
                "command": name,
                "params": {k: v for k, v in entry.items() if k != "command"},
                "checks": checks,
                "products": products,
                "pass": entry_pass,
            }
        )
        status = "PASS" if entry_pass else "FAIL"
        print(f"[{index}] {name}: {status} ({elapsed_ms:.1f} ms)")
        for check in checks:
            line = f"    {check['id']}: {'PASS' if check['pass'] else 'FAIL'}"
            if "residual" in check:
                line += f" residual={check['residual']:.3e}"
            if "detail" in check:
                line += f" ({check['detail']})"
            print(line)

    report = {
        "schema_version": SCHEMA_VERSION,
        "command": args.command,
        "seed": args.seed,
        "tolerance": args.tolerance,
        "results": results,
        "pass": overall_pass,
    }
    if args.out:
        with open(args.out, "w", encoding="utf-8") as handle:
            json.dump(report, handle, indent=2, sort_keys=True)
            handle.write("\n")
    print(f"overall: {'PASS' if overall_pass else 'FAIL'}")
    return 0 if overall_pass else 1


if __name__ == "__main__":
    sys.exit(main())
