"""JSON formats for instances, constraint systems and rental scenarios."""

from __future__ import annotations

import json
from fractions import Fraction

import jsonschema

from .fbce import ConstraintSystem, LinearConstraint
from .model import ArcIndex, EqualFlowClass, Objective, ProblemInstance, VarBounds

_INT = {"type": "integer"}
_ARC = {"type": "array", "items": {"type": "integer", "minimum": 0}, "minItems": 3, "maxItems": 3}
_REL = {"enum": ["=", "<=", ">="]}
_NUM = {"oneOf": [{"type": "integer"}, {"type": "string", "pattern": r"^-?\d+(/\d+)?$"}]}

INSTANCE_SCHEMA = {
    "type": "object",
    "required": ["dims", "row_supply", "col_demand"],
    "properties": {
        "dims": {"type": "array", "items": {"type": "integer", "minimum": 0},
                 "minItems": 3, "maxItems": 3},
        "row_supply": {"type": "array", "items": {"type": "array", "items": _INT}},
        "col_demand": {"type": "array", "items": {"type": "array", "items": _INT}},
        "row_rel": _REL,
        "col_rel": _REL,
        "kind": {"enum": ["transportation", "assignment", "generalized"]},
        "bounds": {
            "type": "object",
            "properties": {
                "default": {"type": "array", "minItems": 2, "maxItems": 2,
                            "items": {"type": ["integer", "null"]}},
                "overrides": {"type": "array", "items": {
                    "type": "object", "required": ["arc"],
                    "properties": {"arc": _ARC, "lo": _INT,
                                   "hi": {"type": ["integer", "null"]}}}},
            },
        },
        "classes": {"type": "array", "items": {
            "type": "object", "required": ["id", "members"],
            "properties": {"id": {"type": "string"},
                           "members": {"type": "array", "items": _ARC, "minItems": 1},
                           "value": {"type": ["integer", "null"]}}}},
        "forbidden": {"type": "array", "items": _ARC},
        "cost": {"type": "object", "properties": {
            "linear": {"type": "array", "items": _INT}}},
    },
}

SYSTEM_SCHEMA = {
    "type": "object",
    "required": ["constraints"],
    "properties": {
        "variables": {"type": "array", "items": {"type": "string"}},
        "constraints": {"type": "array", "items": {
            "type": "object", "required": ["coeffs", "rel", "rhs"],
            "properties": {"coeffs": {"type": "object", "additionalProperties": _NUM},
                           "rel": _REL, "rhs": _NUM}}},
        "bounds": {"type": "object", "additionalProperties": {
            "type": "array", "minItems": 2, "maxItems": 2, "items": {"type": ["integer", "null"]}}},
    },
}

SCENARIO_SCHEMA = {
    "type": "object",
    "required": ["horizon", "models", "availability", "requests"],
    "properties": {
        "horizon": {"type": "integer", "minimum": 1},
        "models": {"type": "array", "items": {"type": "string"}, "minItems": 1},
        "availability": {"oneOf": [
            {"type": "object", "required": ["counts"], "properties": {
                "counts": {"type": "array", "items": {"type": "array", "items": _INT}}}},
            {"type": "object", "required": ["roster"], "properties": {
                "roster": {"type": "array", "items": {
                    "type": "object", "required": ["model", "days"],
                    "properties": {"id": {"type": "string"}, "model": {"type": "string"},
                                   "days": {"type": "array", "items": _INT}}}}}},
        ]},
        "requests": {"type": "array", "items": {
            "type": "object", "required": ["id", "start", "duration", "models", "quantity"],
            "properties": {"id": {"type": "string"}, "start": _INT, "duration": _INT,
                           "models": {"type": "array", "items": {"type": "string"}},
                           "quantity": _INT}}},
    },
}


class SchemaError(ValueError):
    """Input does not match the expected JSON layout; ``pointer`` locates the fault."""

    def __init__(self, pointer: str, message: str):
        super().__init__(f"{pointer or '/'}: {message}")
        self.pointer = pointer


def _pointer(path) -> str:
    return "".join(f"/{p}" for p in path)


def _validate(doc, schema):
    errors = sorted(jsonschema.Draft7Validator(schema).iter_errors(doc),
                    key=lambda e: list(map(str, e.absolute_path)))
    if errors:
        e = errors[0]
        raise SchemaError(_pointer(e.absolute_path), e.message)


def detect(doc) -> str:
    if isinstance(doc, dict) and "constraints" in doc:
        return "system"
    if isinstance(doc, dict) and "requests" in doc:
        return "scenario"
    return "instance"


# -- instances ---------------------------------------------------------------

def instance_from_json(doc) -> ProblemInstance:
    _validate(doc, INSTANCE_SCHEMA)
    ni, nj, nt = doc["dims"]
    b = doc.get("bounds", {})
    lo, hi = b.get("default", [0, None])
    overrides = {}
    for k, o in enumerate(b.get("overrides", [])):
        overrides[ArcIndex(*o["arc"])] = VarBounds(o.get("lo", 0), o.get("hi"))
    classes = [EqualFlowClass(c["id"], tuple(ArcIndex(*m) for m in c["members"]), c.get("value"))
               for c in doc.get("classes", [])]
    objective = None
    linear = doc.get("cost", {}).get("linear")
    if linear is not None:
        if len(linear) != ni * nj * nt:
            raise SchemaError("/cost/linear", f"expected {ni * nj * nt} row-major costs")
        arcs = [ArcIndex(i, j, t) for i in range(ni) for j in range(nj) for t in range(nt)]
        objective = Objective({a: c for a, c in zip(arcs, linear) if c})
    return ProblemInstance(
        n_sources=ni, n_dests=nj, n_periods=nt,
        row_supply=doc["row_supply"], col_demand=doc["col_demand"],
        row_rel=doc.get("row_rel", "="), col_rel=doc.get("col_rel", "="),
        default_bounds=VarBounds(0 if lo is None else lo, hi),
        bound_overrides=overrides, classes=classes,
        forbidden={ArcIndex(*a) for a in doc.get("forbidden", [])},
        objective=objective, kind=doc.get("kind", "transportation"))


def instance_to_json(inst: ProblemInstance) -> dict:
    if inst.objective is not None and inst.objective.quadratic:
        raise ValueError("quadratic objectives have no JSON form")
    doc = {
        "dims": list(inst.dims),
        "kind": inst.kind,
        "row_supply": [list(r) for r in inst.row_supply],
        "col_demand": [list(c) for c in inst.col_demand],
        "row_rel": inst.row_rel,
        "col_rel": inst.col_rel,
        "bounds": {
            "default": [inst.default_bounds.lower, inst.default_bounds.upper],
            "overrides": [{"arc": list(a), "lo": b.lower, "hi": b.upper}
                          for a, b in sorted(inst.bound_overrides.items())],
        },
        "classes": [{"id": c.id, "members": [list(m) for m in c.members], "value": c.shared_value}
                    for c in inst.classes],
        "forbidden": [list(a) for a in sorted(inst.forbidden)],
    }
    if inst.objective is not None:
        doc["cost"] = {"linear": [inst.objective.linear.get(a, 0) for a in inst.arcs()]}
    return doc


# -- systems -----------------------------------------------------------------

def system_from_json(doc):
    """Returns ``(ConstraintSystem, bounds)``; bounds rows are added to the system."""
    _validate(doc, SYSTEM_SCHEMA)
    cons = [LinearConstraint({v: Fraction(c) for v, c in con["coeffs"].items()},
                             con["rel"], Fraction(con["rhs"]))
            for con in doc["constraints"]]
    names = list(doc.get("variables") or [])
    for con in cons:
        for v in sorted(con.coeffs):
            if v not in names:
                names.append(v)
    bounds = {v: tuple(b) for v, b in doc.get("bounds", {}).items()}
    for v in bounds:
        if v not in names:
            names.append(v)
    for v, (lo, hi) in bounds.items():
        if lo is not None:
            cons.append(LinearConstraint({v: 1}, ">=", lo))
        if hi is not None:
            cons.append(LinearConstraint({v: 1}, "<=", hi))
    return ConstraintSystem.from_constraints(names, cons), bounds


def fraction_str(x) -> str:
    x = Fraction(x)
    return str(x.numerator) if x.denominator == 1 else f"{x.numerator}/{x.denominator}"


# -- rental scenarios ------------------------------------------------------------

def scenario_from_json(doc):
    from .carrental import Car, FleetAvailability, RentalRequest, RentalScenario
    _validate(doc, SCENARIO_SCHEMA)
    T, models = doc["horizon"], tuple(doc["models"])
    av = doc["availability"]
    if "roster" in av:
        cars = tuple(Car(c["model"], frozenset(c["days"]), c.get("id", f"car{k}"))
                     for k, c in enumerate(av["roster"]))
        fleet = FleetAvailability.from_roster(T, models, cars)
    else:
        fleet = FleetAvailability(T, models, tuple(tuple(r) for r in av["counts"]))
    reqs = tuple(RentalRequest(r["id"], r["start"], r["duration"], tuple(r["models"]),
                               r["quantity"]) for r in doc["requests"])
    return RentalScenario(fleet, reqs)


def scenario_to_json(scenario) -> dict:
    f = scenario.fleet
    if f.roster is not None:
        av = {"roster": [{"id": c.id, "model": c.model, "days": sorted(c.days)} for c in f.roster]}
    else:
        av = {"counts": [list(r) for r in f.counts]}
    return {"horizon": f.horizon, "models": list(f.models), "availability": av,
            "requests": [{"id": r.id, "start": r.start, "duration": r.duration,
                          "models": list(r.models), "quantity": r.quantity}
                         for r in scenario.requests]}


def dumps(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":")) + "\n"
