"""Bound reports and their JSON/CSV forms.

Every evaluator returns a BoundReport whose value is recomputable from its
components by a fixed per-name formula, so downstream consumers can audit
reported numbers bit-for-bit.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field

CSV_COLUMNS = [
    "instance_id",
    "bound_name",
    "value",
    "se",
    "alpha",
    "p",
    "q",
    "a",
    "eta",
    "m_const",
    "samples",
    "seed",
    "n_max",
]


@dataclass
class BoundReport:
    name: str
    value: float
    components: dict = field(default_factory=dict)
    params: dict = field(default_factory=dict)
    witness: object = None
    se: float | None = None
    diagnostics: list = field(default_factory=list)

    def to_json(self) -> dict:
        out = {
            "name": self.name,
            "value": self.value,
            "components": dict(self.components),
            "params": dict(self.params),
        }
        if self.se is not None:
            out["se"] = self.se
        if self.diagnostics:
            out["diagnostics"] = list(map(str, self.diagnostics))
        return out

    def recompute(self) -> float:
        """Re-derive the value from the components (see RECOMPUTE_RULES)."""
        rule = RECOMPUTE_RULES.get(self.name)
        if rule is None:
            raise KeyError(f"no recompute rule for {self.name!r}")
        return rule(self.components, self.params)


def _terms(components, prefix):
    keys = sorted((k for k in components if k.startswith(prefix)), key=lambda k: int(k.rsplit("_", 1)[1]))
    return [components[k] for k in keys]


def _sum_pow(components, params):
    p = params.get("p", 1.0)
    return sum(_terms(components, "term_")) ** (1.0 / p)


def _sup(components, params):
    terms = _terms(components, "term_")
    return max(terms) if terms else 0.0


def _two_part(components, params):
    return components["first"] + components["second"]


def _scaled_sum_pow(components, params):
    ex = params["exponent"]
    return components["scale"] * sum(_terms(components, "term_")) ** (1.0 / ex)


def _scaled_sup(components, params):
    return components["scale"] * _sup(components, params)


def _value_passthrough(components, params):
    return components["value"]


RECOMPUTE_RULES = {
    "dudley": _sum_pow,
    "local_dudley": _sum_pow,
    "sudakov": _sup,
    "interpolation": _two_part,
    "lattice": _scaled_sum_pow,
    "lattice_q1": _scaled_sup,
    "qconvex": _scaled_sup,
    "pipeline_geom": _value_passthrough,
    "pipeline_ucvx": _value_passthrough,
    "pipeline_plain": _value_passthrough,
    "mm_pipeline": _value_passthrough,
    "rudelson": lambda c, p: c["base_norm"] * c["log_factor"],
    "dimension_free": lambda c, p: c["weighted_norm"],
    "supernck": _two_part,
    "gordon": _two_part,
    "mc_norm": _value_passthrough,
    "row_norm_lower": _value_passthrough,
    "gaussian_width": _value_passthrough,
}


def report_to_json_file(reports, path, config=None):
    payload = {"config": config or {}, "reports": [r.to_json() for r in reports]}
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def reports_to_csv_rows(reports, instance_id):
    rows = []
    for r in reports:
        params = r.params
        rows.append(
            {
                "instance_id": instance_id,
                "bound_name": r.name,
                "value": repr(r.value),
                "se": "" if r.se is None else repr(r.se),
                "alpha": params.get("alpha", ""),
                "p": params.get("p", ""),
                "q": params.get("q", ""),
                "a": params.get("a", ""),
                "eta": params.get("eta", ""),
                "m_const": params.get("m_const", ""),
                "samples": params.get("samples", ""),
                "seed": params.get("seed", ""),
                "n_max": params.get("n_max", ""),
            }
        )
    return rows


def write_csv(rows, path):
    with open(path, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=CSV_COLUMNS)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
