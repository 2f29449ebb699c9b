"""Scenario-file runner.

Exit codes: 0 success, 2 parse error (unreadable file, malformed document,
unknown/missing keys, wrong types), 3 scenario-invariant error (non-unit
axes, superluminal frames, events not spacelike, ...), 4 internal error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from . import __version__
from .epr import Case, Conclusion, EPRScenario, draw_outcomes, frame_scan, run_in_frame, verdict_in_frame
from .hilbert import joint_probabilities, singlet, spin_observable
from .report import canonical_json, event_dump, format_float, ledger_dump
from .spacetime import LAB, Event, Frame

EXIT_OK, EXIT_PARSE, EXIT_INVARIANT, EXIT_INTERNAL = 0, 2, 3, 4

REQUIRED_KEYS = ("axis_r", "axis_l", "event_r", "event_l", "velocities", "seed")
OPTIONAL_KEYS = ("t0", "forced_outcomes", "output")
DEFAULT_T0 = -1.0


class ScenarioError(Exception):
    exit_code = EXIT_INTERNAL

    def __init__(self, key: str, message: str):
        super().__init__(f"{key}: {message}")
        self.key = key


class ScenarioParseError(ScenarioError):
    exit_code = EXIT_PARSE


class ScenarioInvariantError(ScenarioError):
    exit_code = EXIT_INVARIANT


@dataclass(frozen=True)
class ScenarioFile:
    scenario: EPRScenario
    velocities: tuple
    output: str = "text"

    def to_dict(self) -> dict:
        sc = self.scenario
        doc = {
            "axis_r": list(sc.axis_r),
            "axis_l": list(sc.axis_l),
            "event_r": event_dump(sc.event_r),
            "event_l": event_dump(sc.event_l),
            "t0": sc.t0,
            "velocities": [list(v) for v in self.velocities],
            "seed": sc.seed,
            "output": self.output,
        }
        if sc.forced_outcomes is not None:
            doc["forced_outcomes"] = {"r": int(sc.forced_outcomes[0]), "l": int(sc.forced_outcomes[1])}
        return doc


def _reject_constant(name):
    raise ScenarioParseError("document", f"non-finite number {name} is not allowed")


def _number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(key, f"expected a number, got {type(value).__name__}")
    if not math.isfinite(value):
        raise ScenarioParseError(key, "number must be finite")
    return float(value)


def _vector(value, key: str) -> tuple:
    if not isinstance(value, list) or len(value) != 3:
        raise ScenarioParseError(key, "expected an array of 3 numbers")
    return tuple(_number(v, f"{key}[{i}]") for i, v in enumerate(value))


def _event(value, key: str) -> Event:
    if not isinstance(value, dict):
        raise ScenarioParseError(key, "expected an object {t, x}")
    extra = set(value) - {"t", "x"}
    if extra:
        raise ScenarioParseError(f"{key}.{sorted(extra)[0]}", "unknown key")
    for k in ("t", "x"):
        if k not in value:
            raise ScenarioParseError(f"{key}.{k}", "missing required key")
    return Event(_number(value["t"], f"{key}.t"), _vector(value["x"], f"{key}.x"))


def scenario_from_dict(doc) -> ScenarioFile:
    if not isinstance(doc, dict):
        raise ScenarioParseError("document", "top level must be an object")
    unknown = sorted(set(doc) - set(REQUIRED_KEYS) - set(OPTIONAL_KEYS))
    if unknown:
        raise ScenarioParseError(unknown[0], "unknown key")
    for key in REQUIRED_KEYS:
        if key not in doc:
            raise ScenarioParseError(key, "missing required key")

    axis_r = _vector(doc["axis_r"], "axis_r")
    axis_l = _vector(doc["axis_l"], "axis_l")
    event_r = _event(doc["event_r"], "event_r")
    event_l = _event(doc["event_l"], "event_l")
    t0 = _number(doc.get("t0", DEFAULT_T0), "t0")
    if not isinstance(doc["velocities"], list):
        raise ScenarioParseError("velocities", "expected an array of 3-vectors")
    velocities = tuple(_vector(v, f"velocities[{i}]") for i, v in enumerate(doc["velocities"]))
    seed = doc["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ScenarioParseError("seed", "expected an integer")
    if seed < 0:
        raise ScenarioInvariantError("seed", "must be non-negative")
    output = doc.get("output", "text")
    if output not in ("json", "text"):
        raise ScenarioParseError("output", 'expected "json" or "text"')
    forced = doc.get("forced_outcomes")
    if forced is not None:
        if not isinstance(forced, dict) or set(forced) != {"r", "l"}:
            raise ScenarioParseError("forced_outcomes", "expected an object with keys r and l")
        values = (_number(forced["r"], "forced_outcomes.r"), _number(forced["l"], "forced_outcomes.l"))
        for side, v in zip("rl", values):
            if v not in (1.0, -1.0):
                raise ScenarioInvariantError(f"forced_outcomes.{side}", "must be +1 or -1")
        forced = values

    for key, axis in (("axis_r", axis_r), ("axis_l", axis_l)):
        norm = math.sqrt(sum(c * c for c in axis))
        if abs(norm - 1.0) > 1e-9:
            raise ScenarioInvariantError(key, f"must be a unit vector (norm {norm:.12g})")
    for i, v in enumerate(velocities):
        try:
            Frame(v)
        except ValueError:
            raise ScenarioInvariantError(
                f"velocities[{i}]", f"frame speed must be subluminal, got {math.sqrt(sum(c * c for c in v)):.12g}"
            ) from None
    try:
        scenario = EPRScenario(axis_r, axis_l, event_r, event_l, t0=t0, seed=seed, forced_outcomes=forced)
    except ValueError as exc:
        raise ScenarioInvariantError("scenario", str(exc)) from None
    return ScenarioFile(scenario, velocities, output)


def parse_scenario(path) -> ScenarioFile:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except (OSError, UnicodeDecodeError) as exc:
        raise ScenarioParseError("scenario", f"cannot read {path}: {exc}") from None
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError("document", f"malformed JSON: {exc}") from None
    return scenario_from_dict(doc)


def _premise_dump(p) -> dict:
    return {
        "reality": p.reality,
        "r_locality": p.r_locality,
        "completeness": p.completeness,
        "adequacy": p.adequacy,
        "outcome_dependence": p.outcome_dependence,
        "trace": [{"premise": t.premise, "note": t.note} for t in p.trace],
    }


def build_report(spec: ScenarioFile) -> dict:
    sc = spec.scenario
    rows = frame_scan(sc, spec.velocities)
    outcomes = draw_outcomes(sc)
    frames = [
        {
            "velocity": list(row.frame.velocity),
            "case": row.case.value,
            "ordering": row.ordering.value,
            "boosted_times": {"r": row.boosted_times[0], "l": row.boosted_times[1]},
            "verdicts": {o: c.value for o, c in row.verdict.conclusions.items()},
            "outcomes": {"r": row.verdict.outcomes[0], "l": row.verdict.outcomes[1]},
            "premises": {o: _premise_dump(p) for o, p in row.verdict.premises.items()},
        }
        for row in rows
    ]
    lab_ledger = run_in_frame(LAB, sc, outcomes)
    joint = joint_probabilities(singlet(), spin_observable(sc.axis_r), spin_observable(sc.axis_l))
    lab = verdict_in_frame(LAB, sc, outcomes=outcomes)
    checks = {
        "outcomes_possible": joint[tuple(outcomes)] > 0,
        "outcomes_frame_independent": all(row.verdict.outcomes == tuple(outcomes) for row in rows),
        "verdicts_match_premises": True,
        "lab_case": lab.case.value,
    }
    return {
        "version": __version__,
        "scenario": spec.to_dict(),
        "outcomes": {"r": outcomes[0], "l": outcomes[1]},
        "frames": frames,
        "ledger": ledger_dump(lab_ledger),
        "consistency": checks,
    }


_CASE_TEXT = {
    Case.A: "M_R precedes M_L",
    Case.B: "M_R follows M_L",
    Case.C: "M_R and M_L simultaneous",
}
_CONCLUSION_TEXT = {
    Conclusion.ARGUMENT_APPLIES: "argument applies: incomplete or nonlocal relative to this observer",
    Conclusion.ARGUMENT_FAILS: "argument fails relative to this observer",
    Conclusion.OUTCOME_OUTCOME_DEPENDENCE: "outcome-outcome dependence only",
}


def _vec_text(v) -> str:
    return "(" + ", ".join(format_float(c) for c in v) + ")"


def render_text(report: dict) -> str:
    sc = report["scenario"]
    lines = [
        f"relational-epr {report['version']}",
        f"axis_r={_vec_text(sc['axis_r'])} axis_l={_vec_text(sc['axis_l'])} seed={sc['seed']}",
        f"event_r=(t={format_float(sc['event_r']['t'])}, x={_vec_text(sc['event_r']['x'])}) "
        f"event_l=(t={format_float(sc['event_l']['t'])}, x={_vec_text(sc['event_l']['x'])})",
        f"outcomes: R={report['outcomes']['r']:+g} L={report['outcomes']['l']:+g}",
        "",
    ]
    for row in report["frames"]:
        case = Case(row["case"])
        bt = row["boosted_times"]
        lines.append(
            f"frame v={_vec_text(row['velocity'])}: case {case.value} ({_CASE_TEXT[case]}; "
            f"t'_R={format_float(bt['r'])}, t'_L={format_float(bt['l'])})"
        )
        for observer in sorted(row["verdicts"]):
            lines.append(f"  {observer}: {_CONCLUSION_TEXT[Conclusion(row['verdicts'][observer])]}")
    lines.append("")
    checks = report["consistency"]
    lines.append("checks: " + ", ".join(f"{k}={checks[k]}" for k in sorted(checks)))
    return "\n".join(lines) + "\n"


def run(spec: ScenarioFile, fmt: Optional[str] = None) -> str:
    report = build_report(spec)
    return canonical_json(report) if (fmt or spec.output) == "json" else render_text(report)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="relational-epr", description=__doc__.splitlines()[0])
    parser.add_argument("--scenario", required=True, help="path to a JSON scenario file")
    parser.add_argument("--seed", type=int, help="override the scenario seed")
    parser.add_argument("--format", choices=("json", "text"), help="report format (default: file's output key, else text)")
    parser.add_argument("--out", help="write the report here instead of standard output")
    parser.add_argument("--version", action="version", version=__version__)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        spec = parse_scenario(args.scenario)
        if args.seed is not None:
            doc = spec.to_dict()
            doc["seed"] = args.seed
            spec = scenario_from_dict(doc)
        text = run(spec, args.format)
    except ScenarioError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
