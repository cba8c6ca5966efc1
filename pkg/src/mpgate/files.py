"""CSV and JSON file formats: cells, labels, traces, accuracy tables, posterior samples."""
from __future__ import annotations

import csv
import json
from pathlib import Path
from typing import Sequence

import numpy as np

from .emissions import CellMatrix
from .export import tree_from_dict, tree_to_dict, with_gaussians
from .inference import Chain, PosteriorResult
from .partition import leaves
from .priors import Hyperparameters, PriorTable, parse_table


def _open_read(path):
    path = Path(path)
    if not path.is_file():
        raise FileNotFoundError(f"no such file: {path}")
    return path.open(newline="", encoding="utf-8")


def _open_write(path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    return path.open("w", newline="", encoding="utf-8")


def read_table(path) -> PriorTable:
    with _open_read(path) as fh:
        return parse_table(fh.read())


def write_table(path, table: PriorTable) -> None:
    with _open_write(path) as fh:
        fh.write(table.to_csv())


def read_cells(path) -> CellMatrix:
    with _open_read(path) as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty cell file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ValueError(f"{path}, line {lineno}: expected {len(header)} values, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}, line {lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no cells")
    return CellMatrix(np.array(rows), tuple(header))


def write_cells(path, data: CellMatrix) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(data.markers)
        for row in data.values:
            writer.writerow([repr(float(v)) for v in row])


def write_labels(path, labels: Sequence[str], fractions: Sequence[float] | None = None,
                 per_sample: Sequence[Sequence[str]] | None = None) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["cell", "label"]
        if fractions is not None:
            header.append("vote_fraction")
        if per_sample is not None:
            header += [f"sample_{s}" for s in range(len(per_sample))]
        writer.writerow(header)
        for i, label in enumerate(labels):
            row = [i, label]
            if fractions is not None:
                row.append(repr(float(fractions[i])))
            if per_sample is not None:
                row += [s[i] for s in per_sample]
            writer.writerow(row)


def read_labels(path) -> np.ndarray:
    with _open_read(path) as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or "label" not in reader.fieldnames:
            raise ValueError(f"{path}: expected a 'label' column")
        return np.array([row["label"] for row in reader], dtype=object)


def write_trace(path, result: PosteriorResult) -> None:
    with _open_write(path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["chain", "iteration", "log_prior", "log_lik", "acceptance_rate"])
        for chain, trace in zip(result.samples, result.traces):
            for it, lp, ll, acc in trace:
                writer.writerow([chain.index, int(it), repr(float(lp)), repr(float(ll)), repr(float(acc))])


def write_accuracy_table(stem, rows: Sequence[tuple[str, float]]) -> tuple[Path, Path]:
    """Write ``stem``.csv and an aligned ``stem``.txt of (method, accuracy) rows."""
    stem = Path(stem)
    csv_path, txt_path = stem.with_suffix(".csv"), stem.with_suffix(".txt")
    with _open_write(csv_path) as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["method", "accuracy"])
        for method, acc in rows:
            writer.writerow([method, f"{acc:.6f}"])
    width = max(len("method"), *(len(m) for m, _ in rows))
    lines = [f"{'method':<{width}}  accuracy", f"{'-' * width}  --------"]
    lines += [f"{m:<{width}}  {100 * a:7.2f}%" for m, a in rows]
    with _open_write(txt_path) as fh:
        fh.write("\n".join(lines) + "\n")
    return csv_path, txt_path


# ------------------------------------------------------------ posterior


def _rng_state_to_json(rng: np.random.Generator) -> dict:
    def conv(x):
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, np.ndarray):
            return {"__array__": x.tolist(), "dtype": str(x.dtype)}
        if isinstance(x, np.integer):
            return int(x)
        return x

    return conv(rng.bit_generator.state)


def _rng_from_json(state: dict) -> np.random.Generator:
    def conv(x):
        if isinstance(x, dict):
            if "__array__" in x:
                return np.array(x["__array__"], dtype=x["dtype"])
            return {k: conv(v) for k, v in x.items()}
        return x

    state = conv(state)
    bitgen = getattr(np.random, state["bit_generator"])()
    bitgen.state = state
    return np.random.Generator(bitgen)


def posterior_to_json(result: PosteriorResult, hyper: Hyperparameters) -> str:
    doc = {
        "hyperparameters": {k: getattr(hyper, k) for k in ("gamma0", "gamma1", "phi0", "phi1", "budget")},
        "samples": [
            {
                "index": c.index,
                "log_prior": c.log_prior,
                "log_lik": c.log_lik,
                "accepted": c.accepted,
                "iterations": c.iterations,
                "rng_state": _rng_state_to_json(c.rng),
                "tree": tree_to_dict(with_gaussians(c.tree, c.params)),
            }
            for c in result.samples
        ],
    }
    return json.dumps(doc, indent=1) + "\n"


def posterior_from_json(text: str) -> tuple[PosteriorResult, Hyperparameters]:
    doc = json.loads(text)
    hyper = Hyperparameters(**doc["hyperparameters"])
    samples = []
    for s in doc["samples"]:
        tree = tree_from_dict(s["tree"])
        gs = [leaf.gaussian for _, leaf in leaves(tree)]
        means = variances = None
        if all(g is not None for g in gs):
            means = np.array([g.mean for g in gs])
            variances = np.array([g.var for g in gs])
        samples.append(Chain(tree, hyper, _rng_from_json(s["rng_state"]), s["log_prior"], s["log_lik"],
                             means, variances, s["accepted"], s["iterations"], s["index"]))
    return PosteriorResult(samples), hyper


def write_posterior(path, result: PosteriorResult, hyper: Hyperparameters) -> None:
    with _open_write(path) as fh:
        fh.write(posterior_to_json(result, hyper))


def read_posterior(path) -> tuple[PosteriorResult, Hyperparameters]:
    with _open_read(path) as fh:
        return posterior_from_json(fh.read())
