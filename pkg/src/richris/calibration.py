"""Offline calibration: code book, context-ignorant baseline and inference banks, persisted as JSON."""
from __future__ import annotations

import json
import logging
import os
import shutil
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from richris import __version__
from richris.engine import ChannelEngine
from richris.inference import InferenceBank, TrainSpec, train_mode_a, train_mode_b
from richris.noise import reference_power, sample_states
from richris.optimizer import CodeBook, ConfigPair, build_codebook, context_ignorant_pair
from richris.scenario import ScenarioSpec, default_document, scenario_hash

log = logging.getLogger(__name__)

FILES = {
    "manifest": "manifest.json",
    "scenario": "scenario.json",
    "codebook": "codebook.json",
    "baseline": "baseline.json",
    "bank_a": "bank_a.json",
    "bank_b": "bank_b.json",
    "report": "report.json",
}


class ArtifactError(ValueError):
    """Missing, inconsistent or foreign calibration artifacts."""


def _seed(master, tag):
    return int(np.random.SeedSequence([int(master), tag]).generate_state(1)[0])


@dataclass
class Manifest:
    """Everything that determines a calibration run."""

    seed: int = 0
    resolution: float = 0.375
    scenario_path: str = None
    mode_a: dict = field(default_factory=lambda: {"snr_range": [-20.0, 40.0]})
    mode_b: dict = field(default_factory=dict)
    positions_a: int = 600
    positions_b: int = 600
    n_series: int = 8
    hidden: tuple = (64, 64)
    baseline_samples: int = 30
    n_pool: int = 100
    reference_samples: int = 50

    def train_spec(self, mode):
        base = {"learning_rate": 0.03, "momentum": 0.9, "batch_size": 32, "epochs": 100, "seed": self.seed,
                "snr_range": (0.0, 40.0)}
        base.update(self.mode_a if mode == "A" else self.mode_b)
        return TrainSpec(**base)

    def to_dict(self):
        d = asdict(self)
        d["hidden"] = list(self.hidden)
        return d

    @classmethod
    def from_dict(cls, d):
        known = {k: v for k, v in d.items() if k in cls.__dataclass_fields__}
        unknown = set(d) - set(known)
        if unknown:
            raise ArtifactError(f"unknown manifest fields: {', '.join(sorted(unknown))}")
        m = cls(**known)
        m.hidden = tuple(int(h) for h in m.hidden)
        if not m.resolution > 0:
            raise ArtifactError("code-book resolution must be positive")
        return m

    def scenario_document(self):
        if self.scenario_path is None:
            return default_document()
        with open(self.scenario_path) as fh:
            return json.load(fh)


@dataclass
class Artifacts:
    manifest: Manifest
    scenario: ScenarioSpec
    p_ref: float
    codebook: CodeBook
    baseline: ConfigPair
    bank_a: InferenceBank
    bank_b: InferenceBank
    report: dict

    @property
    def scenario_hash(self):
        return self.scenario.hash


def calibrate(manifest: Manifest, engine=None):
    doc = manifest.scenario_document()
    spec = ScenarioSpec.from_dict(doc)
    h = scenario_hash(doc)
    if engine is None:
        engine = ChannelEngine(spec)
    n = manifest.reference_samples
    p_ref = reference_power(engine, n, n, seed=_seed(manifest.seed, 1))
    log.info("reference power %.6g", p_ref)
    book = build_codebook(engine, manifest.resolution, seed=manifest.seed, n_pool=manifest.n_pool, scenario_hash=h)
    log.info("code book: %d bins, %d configurations", book.n_bins, len(book.configs()))
    samples = sample_states(np.random.default_rng(_seed(manifest.seed, 2)), manifest.baseline_samples)
    baseline = context_ignorant_pair(engine, samples, seed=_seed(manifest.seed, 3), n_pool=manifest.n_pool)
    bank_a = train_mode_a(engine, p_ref, manifest.n_series, manifest.positions_a, manifest.train_spec("A"),
                          manifest.hidden, h)
    log.info("Mode A bank trained")
    bank_b = train_mode_b(engine, p_ref, book.configs(), manifest.positions_b, manifest.train_spec("B"),
                          manifest.hidden, h)
    log.info("Mode B bank trained (%d model pairs)", len(bank_b.pairs))
    report = build_report(book, baseline, bank_a, bank_b, p_ref)
    return Artifacts(manifest, spec, p_ref, book, baseline, bank_a, bank_b, report)


def _final_validation(pair):
    return {k: (v["validation"][-1] if v.get("validation") else None) for k, v in pair.history.items()}


def build_report(book, baseline, bank_a, bank_b, p_ref):
    entries = [
        {"bin": b, "shape": s, "r0": pair.r0, "r1": pair.r1, "tau": pair.tau}
        for (b, s), pair in sorted(book.entries.items())
    ]
    return {
        "p_ref": p_ref,
        "n_bins": book.n_bins,
        "n_entries": len(entries),
        "entries": entries,
        "all_separated": all(e["r1"] > e["r0"] for e in entries),
        "baseline": baseline.to_dict(),
        "mode_a_validation": _final_validation(bank_a.pairs[0]),
        "mode_b_validation": {str(k): _final_validation(p) for k, p in sorted(bank_b.pairs.items())},
    }


def _dump(obj, path):
    with open(path, "w") as fh:
        json.dump(obj, fh, sort_keys=True, separators=(",", ":"))
        fh.write("\n")


def save(art: Artifacts, out_dir):
    """Write all artifacts atomically: nothing is left behind when a write fails."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tmp = Path(tempfile.mkdtemp(prefix=".calibrate-", dir=out))
    try:
        meta = {
            "version": __version__,
            "scenario_hash": art.scenario_hash,
            "p_ref": art.p_ref,
            "manifest": art.manifest.to_dict(),
        }
        _dump(meta, tmp / FILES["manifest"])
        _dump(art.scenario.source, tmp / FILES["scenario"])
        _dump(art.codebook.to_dict(), tmp / FILES["codebook"])
        _dump({"scenario_hash": art.scenario_hash, **art.baseline.to_dict()}, tmp / FILES["baseline"])
        _dump(art.bank_a.to_dict(), tmp / FILES["bank_a"])
        _dump(art.bank_b.to_dict(), tmp / FILES["bank_b"])
        _dump(art.report, tmp / FILES["report"])
        for name in FILES.values():
            os.replace(tmp / name, out / name)
    finally:
        shutil.rmtree(tmp, ignore_errors=True)
    return out


def _read(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except FileNotFoundError:
        raise ArtifactError(f"missing artifact {path}") from None


def load(art_dir, scenario_path=None):
    """Load and cross-check artifacts; ``scenario_path`` must hash to the calibrated scenario."""
    d = Path(art_dir)
    meta = _read(d / FILES["manifest"])
    expected = meta["scenario_hash"]
    doc = _read(d / FILES["scenario"]) if scenario_path is None else _read(scenario_path)
    if scenario_hash(doc) != expected:
        raise ArtifactError("scenario does not match the calibrated scenario (hash mismatch)")
    book = CodeBook.from_dict(_read(d / FILES["codebook"]))
    base_doc = _read(d / FILES["baseline"])
    bank_a = InferenceBank.from_dict(_read(d / FILES["bank_a"]))
    bank_b = InferenceBank.from_dict(_read(d / FILES["bank_b"]))
    for name, h in (("code book", book.scenario_hash), ("baseline", base_doc.get("scenario_hash")),
                    ("Mode A bank", bank_a.scenario_hash), ("Mode B bank", bank_b.scenario_hash)):
        if h != expected:
            raise ArtifactError(f"{name} was calibrated for a different scenario")
    return Artifacts(
        Manifest.from_dict(meta["manifest"]),
        ScenarioSpec.from_dict(doc),
        float(meta["p_ref"]),
        book,
        ConfigPair.from_dict(base_doc),
        bank_a,
        bank_b,
        _read(d / FILES["report"]),
    )
