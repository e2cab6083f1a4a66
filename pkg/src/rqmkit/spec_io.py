"""Parsing and serialization of problem-description files.

Problem files are UTF-8 JSON with an ``objects`` section (algebras, elements,
states, morphisms, CP maps, random quantum maps, chains, kernels, classical
random maps) and a ``commands`` list.  Complex numbers are two-element arrays
[re, im] (bare reals are accepted on input), matrices are row-major nested
arrays, and morphisms are keyed by domain basis labels "block.row.col".
Objects are validated on load; every reference must name an earlier object.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

import numpy as np

from .algebra import (
    Algebra,
    Element,
    State,
    make_algebra,
    make_state,
    tensor_algebra,
)
from .chain import ChainSpec, homogeneous_chain_spec
from .classical import ClassicalRandomMap, FiniteSpace, make_kernel
from .errors import RqmError, SpecFormatError
from .maps import LinearMap, linear_map_from_images, validate_cp_unital, validate_morphism
from .rqm import QuantumFamily, RandomQuantumMap

SCHEMA_VERSION = 1


@dataclass
class Problem:
    """A fully validated object graph plus the command list."""

    objects: dict[str, Any]
    commands: list[dict]
    path: str = ""


# ---------------------------------------------------------------------------
# JSON <-> numbers and matrices
# ---------------------------------------------------------------------------

def parse_complex(value, where: str) -> complex:
    if isinstance(value, (int, float)):
        return complex(value)
    if (
        isinstance(value, (list, tuple))
        and len(value) == 2
        and all(isinstance(v, (int, float)) for v in value)
    ):
        return complex(value[0], value[1])
    raise SpecFormatError(f"{where}: expected a number or [re, im], got {value!r}")


def parse_matrix(value, size: int, where: str) -> np.ndarray:
    if not isinstance(value, list) or len(value) != size:
        raise SpecFormatError(f"{where}: expected {size} rows")
    out = np.zeros((size, size), dtype=complex)
    for i, row in enumerate(value):
        if not isinstance(row, list) or len(row) != size:
            raise SpecFormatError(f"{where}: row {i} must have {size} entries")
        for j, entry in enumerate(row):
            out[i, j] = parse_complex(entry, f"{where}[{i}][{j}]")
    return out


def complex_to_json(z: complex) -> list[float]:
    return [float(z.real), float(z.imag)]


def matrix_to_json(mat: np.ndarray) -> list:
    return [[complex_to_json(complex(v)) for v in row] for row in np.asarray(mat)]


def blocks_to_json(mats) -> list:
    return [matrix_to_json(m) for m in mats]


def parse_blocks(value, algebra: Algebra, where: str) -> list[np.ndarray]:
    if not isinstance(value, list) or len(value) != algebra.n_blocks:
        raise SpecFormatError(
            f"{where}: expected {algebra.n_blocks} blocks for {algebra}"
        )
    return [
        parse_matrix(v, n, f"{where} block {i}")
        for i, (v, n) in enumerate(zip(value, algebra.blocks))
    ]


# ---------------------------------------------------------------------------
# Object serialization (used for report products)
# ---------------------------------------------------------------------------

def element_to_json(el: Element) -> dict:
    return {
        "algebra_blocks": list(el.algebra.blocks),
        "blocks": blocks_to_json(el.mats),
    }


def state_to_json(state: State) -> dict:
    return {
        "algebra_blocks": list(state.algebra.blocks),
        "densities": blocks_to_json(state.densities),
    }


def map_to_json(f: LinearMap) -> dict:
    images = {}
    for (j, p, q), img in zip(f.domain.basis_labels(), f.basis_images()):
        images[f"{j}.{p}.{q}"] = blocks_to_json(img.mats)
    return {
        "domain_blocks": list(f.domain.blocks),
        "codomain_blocks": list(f.codomain.blocks),
        "kind": f.kind,
        "images": images,
    }


def rqm_to_json(r: RandomQuantumMap) -> dict:
    return {
        "domain_blocks": list(r.domain.blocks),
        "target_blocks": list(r.target.blocks),
        "params_blocks": list(r.params.blocks),
        "phi": map_to_json(r.phi),
        "param_state": state_to_json(r.param_state),
    }


# ---------------------------------------------------------------------------
# Object parsing
# ---------------------------------------------------------------------------

def _resolve(objects: dict, name, expected, where: str):
    if not isinstance(name, str):
        raise SpecFormatError(f"{where}: expected an object name, got {name!r}")
    if name not in objects:
        raise SpecFormatError(f"{where}: unresolved reference {name!r}")
    obj = objects[name]
    if expected is not None and not isinstance(obj, expected):
        raise SpecFormatError(
            f"{where}: {name!r} is a {type(obj).__name__}, "
            f"expected {expected.__name__}"
        )
    return obj


def _parse_map_images(
    decl: dict, objects: dict, where: str
) -> tuple[Algebra, Algebra, list[Element]]:
    domain = _resolve(objects, decl.get("domain"), Algebra, f"{where}.domain")
    codomain = _resolve(objects, decl.get("codomain"), Algebra, f"{where}.codomain")
    images_decl = decl.get("images")
    if not isinstance(images_decl, dict):
        raise SpecFormatError(f"{where}: 'images' must map basis labels to elements")
    images = []
    for j, p, q in domain.basis_labels():
        key = f"{j}.{p}.{q}"
        if key not in images_decl:
            raise SpecFormatError(f"{where}: missing image for basis label {key}")
        images.append(
            Element(codomain, parse_blocks(images_decl[key], codomain, f"{where}[{key}]"))
        )
    return domain, codomain, images


def _parse_object(name: str, decl: dict, objects: dict, tol: float):
    where = f"object {name!r}"
    if not isinstance(decl, dict) or "type" not in decl:
        raise SpecFormatError(f"{where}: each object needs a 'type' field")
    kind = decl["type"]
    if kind == "algebra":
        return make_algebra(decl.get("blocks", []))
    if kind == "element":
        algebra = _resolve(objects, decl.get("algebra"), Algebra, f"{where}.algebra")
        return Element(algebra, parse_blocks(decl.get("blocks"), algebra, where))
    if kind == "state":
        algebra = _resolve(objects, decl.get("algebra"), Algebra, f"{where}.algebra")
        return make_state(
            algebra, parse_blocks(decl.get("densities"), algebra, where), tol=tol
        )
    if kind == "morphism":
        domain, codomain, images = _parse_map_images(decl, objects, where)
        return validate_morphism(
            linear_map_from_images(domain, codomain, images), tol
        )
    if kind == "cp_map":
        domain, codomain, images = _parse_map_images(decl, objects, where)
        return validate_cp_unital(
            linear_map_from_images(domain, codomain, images), tol
        )
    if kind == "rqm":
        target = _resolve(objects, decl.get("target"), Algebra, f"{where}.target")
        params = _resolve(objects, decl.get("params"), Algebra, f"{where}.params")
        phi = _resolve(objects, decl.get("morphism"), LinearMap, f"{where}.morphism")
        param_state = _resolve(
            objects, decl.get("param_state"), State, f"{where}.param_state"
        )
        if phi.codomain != tensor_algebra(target, params):
            raise SpecFormatError(
                f"{where}: morphism codomain {phi.codomain} is not "
                f"target (x) params"
            )
        return RandomQuantumMap(QuantumFamily(target, params, phi), param_state)
    if kind == "chain":
        initial = _resolve(objects, decl.get("initial"), State, f"{where}.initial")
        if "rqm" in decl:
            rqm = _resolve(objects, decl["rqm"], RandomQuantumMap, f"{where}.rqm")
            depth = decl.get("depth")
            if not isinstance(depth, int) or depth < 1:
                raise SpecFormatError(f"{where}: 'depth' must be a positive integer")
            return homogeneous_chain_spec(rqm, initial, depth)
        steps = decl.get("rqms")
        if not isinstance(steps, list) or not steps:
            raise SpecFormatError(f"{where}: need 'rqm' + 'depth' or a 'rqms' list")
        rqms = tuple(
            _resolve(objects, s, RandomQuantumMap, f"{where}.rqms[{i}]")
            for i, s in enumerate(steps)
        )
        return ChainSpec(rqms[0].domain, rqms, initial, homogeneous=False)
    if kind == "kernel":
        matrix = decl.get("matrix")
        if not isinstance(matrix, list):
            raise SpecFormatError(f"{where}: 'matrix' must be a nested array")
        return make_kernel(matrix, tol)
    if kind == "random_map":
        try:
            return ClassicalRandomMap(
                FiniteSpace(int(decl["x"])),
                FiniteSpace(int(decl["y"])),
                FiniteSpace(int(decl["z"])),
                decl["table"],
                decl["nu"],
            )
        except KeyError as exc:
            raise SpecFormatError(f"{where}: missing field {exc}") from exc
    raise SpecFormatError(f"{where}: unknown object type {kind!r}")


def load_problem(path: str, tol: float = 1e-9) -> Problem:
    """Read, parse, and validate a problem file."""
    try:
        with open(path, "r", encoding="utf-8") as handle:
            raw = json.load(handle)
    except OSError as exc:
        raise SpecFormatError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"{path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise SpecFormatError("top level must be a JSON object")
    objects: dict[str, Any] = {}
    decls = raw.get("objects", {})
    if not isinstance(decls, dict):
        raise SpecFormatError("'objects' must be a name -> declaration mapping")
    for name, decl in decls.items():
        try:
            objects[name] = _parse_object(name, decl, objects, tol)
        except SpecFormatError:
            raise
        except RqmError as exc:
            raise SpecFormatError(f"object {name!r} failed validation: {exc}") from exc
    commands = raw.get("commands", [])
    if not isinstance(commands, list) or not all(
        isinstance(c, dict) and "command" in c for c in commands
    ):
        raise SpecFormatError("'commands' must be a list of {'command': ...} entries")
    return Problem(objects=objects, commands=commands, path=path)
