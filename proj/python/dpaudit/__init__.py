"""Python access to the dpaudit core. Documents are plain dicts."""

import json

from dpaudit import _core
from dpaudit._core import (
    Error,
    FabricatedEvidence,
    PreconditionError,
    SchemaError,
    UnknownEntity,
    UnreachableTarget,
    UnsatisfiablePlant,
    classification_metrics,
    cohen_kappa,
    subtype_catalog,
    submit_count,
    wald,
)

__all__ = [
    "Error", "FabricatedEvidence", "PreconditionError", "SchemaError", "UnknownEntity",
    "UnreachableTarget", "UnsatisfiablePlant", "agent_run", "assemble", "classification_metrics",
    "cohen_kappa", "detect_all", "evaluate", "gate_response", "generate", "generate_corpus",
    "run_command", "run_session", "submit_count", "subtype_catalog", "validate_report",
    "validate_trace", "wald",
]


def _text(doc):
    return doc if isinstance(doc, str) else json.dumps(doc)


def generate(plants=(), seed=0, broker_id="broker", page_count=0, padding=0, form_stages=0):
    """Synthetic trace exhibiting exactly the given subtype slugs."""
    return json.loads(_core.generate(list(plants), seed, broker_id, page_count, padding, form_stages))


def generate_corpus(n, seed, mix="table4"):
    traces, truth = _core.generate_corpus(n, seed, mix)
    return [json.loads(t) for t in traces], json.loads(truth)


def validate_trace(trace):
    return _core.validate_trace(_text(trace))


def detect_all(trace, config=""):
    """Rule-detector report; `config` is settings-file text."""
    return json.loads(_core.detect_all(_text(trace), config))


def validate_report(report, trace=None):
    return _core.validate_report(_text(report), None if trace is None else _text(trace))


def run_session(trace, fault=None, step=0, budget=100):
    return json.loads(_core.run_session(_text(trace), fault, step, budget))


def agent_run(trace, fault=None, step=0):
    return json.loads(_core.agent_run(_text(trace), fault, step))


def evaluate(reports, truth, traces):
    return json.loads(
        _core.evaluate([_text(r) for r in reports], _text(truth), [_text(t) for t in traces]))


def assemble(level):
    """(tag, body) pairs of the level's prompt."""
    return _core.assemble(level)


def gate_response(body, trace):
    report, reason = _core.gate_response(_text(body), _text(trace))
    return (None if report is None else json.loads(report)), reason


def run_command(args):
    """(exit code, stdout, stderr) of one CLI invocation."""
    return _core.run_command([str(a) for a in args])
