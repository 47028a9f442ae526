"""Artifact writers: CSV with round-trip precision, binary frames, JSON reports.

Numbers in CSV are written with 17 significant digits so that re-parsing
reproduces the doubles bit-exactly.

Binary trajectory format (little-endian throughout):
    bytes 0-7   magic b"KINKTRJ1"
    uint32      format version (1)
    uint32      n_nodes
    uint64      n_frames
    float64     epsilon, lambda, dx, dt
    float64[n_nodes]    node positions
    then per frame: float64 t, float64[n_nodes] m1, float64[n_nodes] m2
"""

import json
import struct

import numpy as np

MAGIC = b"KINKTRJ1"


def fmt(x) -> str:
    return format(float(x), ".17g")


def write_csv(path, header, rows):
    with open(path, "w") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(v if isinstance(v, str) else fmt(v) for v in row) + "\n")
    return path


def write_trajectory_csv(path, traj):
    """Long format: one row per (frame, node) with columns t,x,m1,m2."""
    x = traj.grid.x
    with open(path, "w") as fh:
        fh.write("t,x,m1,m2\n")
        for i in range(traj.n_frames):
            t = fmt(traj.times[i])
            m1 = traj.m1[i]
            m2 = traj.m2[i]
            for j in range(traj.grid.n_nodes):
                fh.write(f"{t},{fmt(x[j])},{fmt(m1[j])},{fmt(m2[j])}\n")
    return path


def write_trajectory_binary(path, traj):
    cfg = traj.config
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<II", 1, traj.grid.n_nodes))
        fh.write(struct.pack("<Q", traj.n_frames))
        fh.write(struct.pack("<4d", cfg.epsilon, cfg.lam, cfg.dx, cfg.dt))
        fh.write(np.asarray(traj.grid.x, dtype="<f8").tobytes())
        for i in range(traj.n_frames):
            fh.write(struct.pack("<d", float(traj.times[i])))
            fh.write(np.asarray(traj.m1[i], dtype="<f8").tobytes())
            fh.write(np.asarray(traj.m2[i], dtype="<f8").tobytes())
    return path


def read_trajectory_binary(path):
    """Return (meta dict, times, x, m1, m2) from a binary trajectory file."""
    with open(path, "rb") as fh:
        magic = fh.read(8)
        if magic != MAGIC:
            raise ValueError(f"not a kinklab trajectory file (magic {magic!r})")
        version, n_nodes = struct.unpack("<II", fh.read(8))
        if version != 1:
            raise ValueError(f"unsupported trajectory format version {version}")
        (n_frames,) = struct.unpack("<Q", fh.read(8))
        epsilon, lam, dx, dt = struct.unpack("<4d", fh.read(32))
        x = np.frombuffer(fh.read(8 * n_nodes), dtype="<f8")
        times = np.empty(n_frames)
        m1 = np.empty((n_frames, n_nodes))
        m2 = np.empty((n_frames, n_nodes))
        for i in range(n_frames):
            (times[i],) = struct.unpack("<d", fh.read(8))
            m1[i] = np.frombuffer(fh.read(8 * n_nodes), dtype="<f8")
            m2[i] = np.frombuffer(fh.read(8 * n_nodes), dtype="<f8")
    meta = {"epsilon": epsilon, "lambda": lam, "dx": dx, "dt": dt}
    return meta, times, x, m1, m2


def write_json(path, payload):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def report_payload(run_config, results: dict) -> dict:
    """Standard report envelope: full config and master seed embedded."""
    return {
        "experiment": run_config.experiment,
        "config": run_config.as_dict(),
        "master_seed": run_config.sim.seed,
        "results": results,
    }
