"""JSON Schemas for emitted records and the column sets of emitted CSV tables.

Non-finite floats are written as null in JSON, so numeric fields admit null.
"""

from __future__ import annotations

NUM = {"type": ["number", "null"]}
INT = {"type": "integer"}

BUDGET = {
    "type": "object",
    "required": ["t", "s", "diss_u", "diss_b", "I1", "I2", "I3", "I4", "I5",
                 "ddt_shell_energy", "closure_residual", "diss_u_exact", "diss_b_exact"],
    "properties": {k: NUM for k in ("t", "s", "diss_u", "diss_b", "I1", "I2", "I3", "I4", "I5",
                                    "ddt_shell_energy", "closure_residual", "diss_u_exact", "diss_b_exact")},
    "additionalProperties": False,
}

SIMULATE_RECORD = {
    "type": "object",
    "required": ["step", "t", "energy", "energy_u", "energy_b", "dissipation", "divergence_max",
                 "tail_fraction", "shell_spectrum", "budget"],
    "properties": {
        "step": INT,
        "t": NUM,
        "energy": NUM,
        "energy_u": NUM,
        "energy_b": NUM,
        "dissipation": NUM,
        "divergence_max": NUM,
        "tail_fraction": NUM,
        "shell_spectrum": {
            "type": "array",
            "items": {"type": "array", "prefixItems": [INT, NUM, NUM], "minItems": 3, "maxItems": 3},
        },
        "budget": BUDGET,
    },
    "additionalProperties": False,
}

SIMULATE_ERROR = {
    "type": "object",
    "required": ["error", "message", "t"],
    "properties": {"error": {"type": "string"}, "message": {"type": "string"}, "t": NUM},
}

CANCELLATION = {
    "type": "object",
    "required": ["t", "r312", "r512", "r212_412"],
    "properties": {k: {"type": ["number", "null"], "minimum": 0} for k in ("r312", "r512", "r212_412")} | {"t": NUM},
}

SWEEP_SUMMARY = {
    "type": "object",
    "required": ["slope", "r2", "slope_unsquared", "r2_unsquared", "etas", "diffs", "diffs_unsquared", "t_end"],
    "properties": {
        "slope": NUM,
        "r2": NUM,
        "slope_unsquared": NUM,
        "r2_unsquared": NUM,
        "etas": {"type": "array", "items": {"type": "number", "exclusiveMinimum": 0}},
        "diffs": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "diffs_unsquared": {"type": "array", "items": {"type": "number", "minimum": 0}},
        "t_end": NUM,
        "aborted_eta": NUM,
    },
}

RICCATI_SUMMARY = {
    "type": "object",
    "required": ["X0", "C1", "C2", "gamma1", "gamma2", "T_guaranteed", "T_observed"],
    "properties": {k: NUM for k in ("X0", "C1", "C2", "gamma1", "gamma2", "T_guaranteed", "T_observed")},
}

PROBE_SUMMARY = {
    "type": "object",
    "required": ["N", "seeds", "max_ratio"],
    "properties": {
        "N": INT,
        "seeds": INT,
        "max_ratio": {"type": "object", "additionalProperties": {"type": "object", "additionalProperties": NUM}},
    },
}

CSV_COLUMNS = {
    "decompose": ("q", "u_weighted_energy", "b_weighted_energy"),
    "cancellations": ("t", "r312", "r512", "r212_412", "I312", "I512", "I212_412"),
    "probes": ("lemma", "q", "p", "seed", "lhs", "rhs", "ratio"),
    "sweep": ("eta", "sup_diff_sq", "sup_diff"),
    "riccati": ("t", "X"),
}
