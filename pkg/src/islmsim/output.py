"""Serialization of runs: trajectory tables, structured result documents,
provenance records, and the per-directory run lock.

All data files are written deterministically (sorted keys, shortest
round-trip float representation); wall-clock timestamps appear only in the
provenance record.
"""

from __future__ import annotations

import json
import os
import time
from pathlib import Path

import numpy as np

from . import __version__ as _version
from .dynamics import CycleSummary, JumpEvent, Trajectory
from .geometry import Branch, Equilibrium, FoldPoint, LMIsocline
from .model import ValidationReport

__all__ = [
    "SCHEMA_VERSION",
    "RunLockError",
    "acquire_run_lock",
    "release_run_lock",
    "write_json_document",
    "trajectory_table",
    "write_trajectory",
    "read_trajectory",
    "isocline_document",
    "isocline_from_document",
    "equilibria_document",
    "jumps_document",
    "cycle_document",
    "validation_document",
    "simulation_document",
    "provenance_record",
    "write_provenance",
    "emit_outputs",
]

SCHEMA_VERSION = "1"
LOCK_NAME = "islmsim.lock"


class RunLockError(RuntimeError):
    """Another run holds (or left behind) the output directory lock."""


def acquire_run_lock(out_dir: str | Path) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    lock = out_dir / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise RunLockError(
            f"output directory {out_dir} is locked by another run "
            f"(remove {lock} if that run is dead); concurrent runs must use "
            "distinct output directories") from None
    with os.fdopen(fd, "w") as fh:
        fh.write(f"pid={os.getpid()}\n")
    return lock


def release_run_lock(lock: Path) -> None:
    try:
        Path(lock).unlink()
    except OSError:
        pass


# ---------------------------------------------------------------------------
# trajectory table (columnar text)

def trajectory_table(traj: Trajectory, jumps: tuple[JumpEvent, ...] | None = None) -> str:
    """Columnar text with the frozen header t,Y,R,regime."""
    if jumps is None:
        jumps = traj.jumps
    in_jump = np.zeros(len(traj), dtype=bool)
    for j in jumps:
        in_jump |= (traj.t >= j.t_start - 1e-12) & (traj.t <= j.t_end + 1e-12)
    lines = ["t,Y,R,regime"]
    for t, y, r, jflag in zip(traj.t, traj.y, traj.r, in_jump):
        regime = "jump" if jflag else "slow"
        lines.append(f"{float(t)!r},{float(y)!r},{float(r)!r},{regime}")
    return "\n".join(lines) + "\n"


def write_trajectory(path: str | Path, traj: Trajectory,
                     jumps: tuple[JumpEvent, ...] | None = None) -> None:
    Path(path).write_text(trajectory_table(traj, jumps), encoding="utf-8")


def read_trajectory(path: str | Path, mode: str = "full-epsilon",
                    spec_id: str = "") -> Trajectory:
    lines = Path(path).read_text(encoding="utf-8").strip().splitlines()
    if not lines or lines[0] != "t,Y,R,regime":
        raise ValueError(f"{path}: not a trajectory table (bad header)")
    ts, ys, rs = [], [], []
    for ln in lines[1:]:
        t, y, r, _ = ln.split(",")
        ts.append(float(t))
        ys.append(float(y))
        rs.append(float(r))
    return Trajectory(np.asarray(ts), np.asarray(ys), np.asarray(rs), mode, spec_id)


# ---------------------------------------------------------------------------
# structured documents

def write_json_document(path: str | Path, doc: dict) -> None:
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n",
                          encoding="utf-8")


def _branch_entry(b: Branch) -> dict:
    return {
        "id": b.index,
        "stability": b.stability,
        "y": [float(v) for v in b.ys],
        "r": [float(v) for v in b.rs],
        "lo_end": list(b.lo_end),
        "hi_end": list(b.hi_end),
    }


def isocline_document(iso: LMIsocline,
                      equilibria: list[Equilibrium] | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "isocline",
        "y_range": list(iso.y_range),
        "r_range": list(iso.r_range),
        "branches": [_branch_entry(b) for b in iso.branches],
        "folds": [{"y": f.y, "r": f.r, "kind": f.kind} for f in iso.folds],
    }
    if equilibria is not None:
        doc["equilibria"] = equilibria_document(equilibria)["equilibria"]
    return doc


def isocline_from_document(doc: dict) -> LMIsocline:
    if doc.get("kind") != "isocline":
        raise ValueError("not an isocline document")
    branches = []
    for e in doc["branches"]:
        branches.append(Branch(
            ys=np.asarray(e["y"], dtype=float),
            rs=np.asarray(e["r"], dtype=float),
            stability=e["stability"],
            lo_end=tuple(e["lo_end"]),
            hi_end=tuple(e["hi_end"]),
            index=e["id"],
        ))
    folds = [FoldPoint(f["y"], f["r"], f["kind"]) for f in doc["folds"]]
    return LMIsocline(branches, folds, tuple(doc["y_range"]), tuple(doc["r_range"]))


def equilibria_document(equilibria: list[Equilibrium]) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "equilibria",
        "equilibria": [{
            "y": e.y,
            "r": e.r,
            "classification": e.classification,
            "eigenvalues": [[ev.real, ev.imag] for ev in e.eigenvalues],
            "trace": e.trace,
            "det": e.det,
            "disc": e.disc,
            "degenerate": e.degenerate,
            "branch": e.branch_index,
        } for e in equilibria],
    }


def jumps_document(jumps) -> list[dict]:
    return [{
        "t_start": j.t_start, "t_end": j.t_end, "y": j.y_at_jump,
        "r_from": j.r_from, "r_to": j.r_to, "direction": j.direction,
    } for j in jumps]


def cycle_document(cycle: CycleSummary | None) -> dict | None:
    if cycle is None:
        return None
    return {
        "period": cycle.period,
        "orientation": cycle.orientation,
        "jumps": jumps_document(cycle.jumps),
        "y_turning": list(cycle.y_turning),
        "r_extent": list(cycle.r_extent),
        "t_start": cycle.t_start,
    }


def validation_document(report: ValidationReport) -> dict:
    doc = report.to_dict()
    doc["schema_version"] = SCHEMA_VERSION
    doc["kind"] = "validation"
    return doc


def simulation_document(traj: Trajectory, jumps, cycle: CycleSummary | None,
                        trajectory_file: str | None) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "simulation",
        "mode": traj.mode,
        "spec_id": traj.spec_id,
        "samples": len(traj),
        "t_span": [float(traj.t[0]), float(traj.t[-1])] if len(traj) else [],
        "jumps": jumps_document(jumps),
        "cycle": cycle_document(cycle),
        "trajectory_file": trajectory_file,
    }


def provenance_record(config_echo: dict, command: str) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "provenance",
        "tool": "islmsim",
        "version": _version,
        "command": command,
        "created_unix": time.time(),
        "config": config_echo,
        "seeds": None,  # reserved; nothing is randomized in schema version 1
    }


def write_provenance(out_dir: str | Path, config_echo: dict, command: str) -> Path:
    path = Path(out_dir) / "provenance.json"
    write_json_document(path, provenance_record(config_echo, command))
    return path


def emit_outputs(out_dir: str | Path, documents: dict[str, dict],
                 trajectories: dict[str, tuple[Trajectory, tuple]] | None = None,
                 svgs: dict[str, str] | None = None) -> list[Path]:
    """Write every artifact of a run into its output directory.

    `documents` maps file stems to structured documents, `trajectories` maps
    stems to (trajectory, jump events), and `svgs` maps stems to rendered
    markup.  Returns the list of written paths.
    """
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written: list[Path] = []
    for stem, doc in documents.items():
        path = out_dir / f"{stem}.json"
        write_json_document(path, doc)
        written.append(path)
    for stem, (traj, jumps) in (trajectories or {}).items():
        path = out_dir / f"{stem}.csv"
        write_trajectory(path, traj, jumps)
        written.append(path)
    for stem, markup in (svgs or {}).items():
        path = out_dir / f"{stem}.svg"
        path.write_text(markup, encoding="utf-8")
        written.append(path)
    return written
