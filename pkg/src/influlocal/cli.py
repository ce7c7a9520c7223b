"""``influlocal`` command line: synthetic data, preparation, training, evaluation, sweeps."""

from __future__ import annotations

import os

# single-threaded BLAS keeps reruns bitwise identical
for _var in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import argparse
import dataclasses
import json
import logging
import platform
import sys
import time
import zlib
from dataclasses import dataclass, fields

import numpy as np

from . import __version__
from .autodiff import load_checkpoint, save_checkpoint
from .baselines import (PSCNConfig, baseline_columns, baseline_features, linear_train,
                        pscn_encode, pscn_predict, pscn_train, save_baseline_features)
from .data import (ActionLog, EmptyDatasetError, SamplingError, build_instances,
                   filter_and_balance, load_instances, sample_all, save_instances, split,
                   synth_cascades)
from .embed import deepwalk, load_embeddings, save_embeddings
from .eval import EvalReport, UndefinedMetricError, auc, prf1
from .feats import VertexFeatureTable
from .graph import GraphError, load_edge_list, read_graph, save_graph
from .model import (DeepInfConfig, FeatureScaler, TrainingDivergedError, UnsupportedVariantError,
                    attention_scores, encode_instances, fit_feature_scaler, predict, snapshot,
                    train, params_from_arrays)

log = logging.getLogger("influlocal")

COMMANDS = ("prepare", "embed", "features", "train", "eval", "baseline", "attend", "synth", "sweep")

EXIT_USAGE, EXIT_MISSING, EXIT_DATA, EXIT_TRAINING, EXIT_INTERNAL = 2, 3, 4, 5, 1


class ConfigError(ValueError):
    pass


class MissingArtifactError(FileNotFoundError):
    def __init__(self, path, producer):
        super().__init__(f"missing {path}; run `influlocal {producer}` first")


@dataclass
class RunConfig:
    # paths
    workdir: str = "run"
    graph: str = ""
    log: str = ""
    embeddings: str = ""
    features: str = ""
    weighted: bool = False
    # synthetic data
    topology: str = "small-world"
    vertices: int = 5000
    k: int = 10
    rewire: float = 0.2
    m: int = 3
    edge_prob: float = 0.5
    influence: str = "clustering"
    strong_fraction: float = 0.2
    tie_threshold: int = 3
    weak_prob: float = 0.0
    seeds_fraction: float = 0.1
    rounds: int = 10
    actions: int = 20
    # preparation
    min_active: int = 3
    neg_pos: float = 3.0
    train_fraction: float = 0.75
    valid_fraction: float = 0.125
    n: int = 50
    restart: float = 0.8
    # embeddings
    embed_dim: int = 64
    walks_per_vertex: int = 10
    walk_length: int = 40
    window: int = 5
    negatives: int = 5
    embed_epochs: int = 1
    # model
    variant: str = "gat"
    layers: int = 3
    hidden: int = 128
    heads: int = 8
    head_dim: int = 16
    use_vertex_features: bool = True
    use_instance_norm: bool = True
    freeze_embeddings: bool = True
    lr: float = 0.1
    weight_decay: float = 5e-4
    dropout: float = 0.2
    batch_size: int = 64
    max_epochs: int = 500
    patience: int = 20
    # baselines
    baseline: str = "lr"
    l2: float = 1e-4
    linear_epochs: int = 50
    linear_lr: float = 0.01
    pscn_width: int = 16
    pscn_k: int = 5
    # evaluation / analysis
    split: str = "test"
    threshold: float = 0.5
    attend_instances: str = "0"
    # sweep
    axis: str = "heads"
    values: str = "1,2,4,8"
    seed: int = 0

    def sub_seed(self, name: str) -> int:
        """Stable per-purpose seed derived from the global seed."""
        return int(np.random.SeedSequence([self.seed, zlib.crc32(name.encode())]).generate_state(1)[0])

    def path(self, name: str) -> str:
        return os.path.join(self.workdir, name)

    @property
    def graph_path(self) -> str:
        return self.graph or self.path("graph.txt")

    @property
    def log_path(self) -> str:
        return self.log or self.path("actions.txt")

    @property
    def embeddings_path(self) -> str:
        return self.embeddings or self.path("embeddings.txt")

    @property
    def features_path(self) -> str:
        return self.features or self.path("features.txt")

    def model_config(self) -> DeepInfConfig:
        head_dim = self.hidden // self.heads if self.variant == "gat" else self.head_dim
        return DeepInfConfig(
            variant=self.variant, layers=self.layers, hidden=self.hidden, heads=self.heads,
            head_dim=head_dim, n=self.n, restart=self.restart, embed_dim=self.embed_dim,
            use_vertex_features=self.use_vertex_features,
            use_instance_norm=self.use_instance_norm, freeze_embeddings=self.freeze_embeddings,
            lr=self.lr, weight_decay=self.weight_decay, dropout=self.dropout,
            batch_size=self.batch_size, max_epochs=self.max_epochs, patience=self.patience,
            seed=self.sub_seed("train"))

    def pscn_config(self) -> PSCNConfig:
        return PSCNConfig(width=self.pscn_width, k=self.pscn_k, lr=self.lr,
                          weight_decay=self.weight_decay, dropout=self.dropout,
                          batch_size=self.batch_size, max_epochs=self.max_epochs,
                          patience=self.patience, seed=self.sub_seed("pscn"))

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)


def _convert(name: str, raw: str, kind):
    try:
        if kind is bool:
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        return kind(raw)
    except ValueError:
        raise ConfigError(f"bad value {raw!r} for {name}") from None


def _field_types() -> dict:
    defaults = RunConfig()
    return {f.name: type(getattr(defaults, f.name)) for f in fields(RunConfig)}


def read_config_file(path: str) -> dict[str, str]:
    """``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{lineno}: expected key = value")
            key, value = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = value
    return out


def build_config(file_values: dict, overrides: dict) -> RunConfig:
    """Defaults, then the config file, then command-line overrides."""
    types = _field_types()
    values = {}
    for source in (file_values, overrides):
        for key, raw in source.items():
            if key not in types:
                raise ConfigError(f"unknown configuration key {key!r}")
            values[key] = _convert(key, raw, types[key])
    return RunConfig(**values)


def parse_args(argv):
    parser = argparse.ArgumentParser(prog="influlocal", description=__doc__)
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="key = value configuration file")
    parser.add_argument("-v", "--verbose", action="store_true")
    args, rest = parser.parse_known_args(argv)
    overrides = {}
    i = 0
    while i < len(rest):
        tok = rest[i]
        if not tok.startswith("--"):
            raise ConfigError(f"unexpected argument {tok!r}")
        key = tok[2:]
        if "=" in key:
            key, value = key.split("=", 1)
            i += 1
        else:
            if i + 1 >= len(rest):
                raise ConfigError(f"option {tok} needs a value")
            value = rest[i + 1]
            i += 2
        overrides[key.replace("-", "_")] = value
    return args, overrides


def _versions() -> dict:
    import numba
    import scipy
    return {"influlocal": __version__, "python": platform.python_version(),
            "numpy": np.__version__, "scipy": scipy.__version__, "numba": numba.__version__}


def write_json(path: str, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, sort_keys=True, indent=1)
        fh.write("\n")


def write_manifest(cfg: RunConfig, command: str, outputs: list[str], seconds: float) -> str:
    path = cfg.path(f"manifest_{command}.json")
    write_json(path, {"command": command, "config": cfg.to_dict(), "seed": cfg.seed,
                      "versions": _versions(), "outputs": sorted(outputs),
                      "wall_seconds": round(seconds, 3)})
    return path


def _need(path: str, producer: str) -> str:
    if not os.path.exists(path):
        raise MissingArtifactError(path, producer)
    return path


def load_graph(cfg: RunConfig):
    path = _need(cfg.graph_path, "synth")
    with open(path) as fh:
        first = fh.readline().split()
    # files written by save_graph start with a two-integer header
    if len(first) == 2 and all(t.isdigit() for t in first):
        try:
            return read_graph(path)
        except (GraphError, ValueError):
            pass
    return load_edge_list(path, weighted=cfg.weighted)


def load_log(cfg: RunConfig, g) -> ActionLog:
    return ActionLog.load(_need(cfg.log_path, "synth"), g)


def load_embedding_matrix(cfg: RunConfig, g) -> np.ndarray:
    path = _need(cfg.embeddings_path, "embed")
    ids = g.ids if g.ids is not None and cfg.embeddings else None
    return load_embeddings(path, g if ids is not None else None, cfg.embed_dim).vectors


def load_feature_table(cfg: RunConfig) -> VertexFeatureTable:
    return VertexFeatureTable.load(_need(cfg.features_path, "features"))


def load_split(cfg: RunConfig, name: str):
    return load_instances(_need(cfg.path(f"{name}.jsonl"), "prepare"))


# commands

def cmd_synth(cfg: RunConfig) -> list[str]:
    params = {"k": cfg.k, "p": cfg.rewire, "m": cfg.m, "influence": cfg.influence,
              "tie_threshold": cfg.tie_threshold, "weak_prob": cfg.weak_prob,
              "strong_fraction": cfg.strong_fraction}
    g, actions = synth_cascades(cfg.topology, cfg.vertices, params, cfg.edge_prob,
                                cfg.seeds_fraction, cfg.rounds, cfg.sub_seed("synth"), cfg.actions)
    save_graph(g, cfg.path("graph.txt"))
    actions.save(cfg.path("actions.txt"))
    print(f"graph: {g.vertex_count} vertices, {g.edge_count} edges; "
          f"{len(actions)} activations over {len(actions.actions)} actions")
    return [cfg.path("graph.txt"), cfg.path("actions.txt")]


def cmd_embed(cfg: RunConfig) -> list[str]:
    g = load_graph(cfg)
    emb = deepwalk(g, cfg.embed_dim, cfg.walks_per_vertex, cfg.walk_length, cfg.window,
                   cfg.negatives, cfg.embed_epochs, cfg.sub_seed("embed"))
    out = cfg.path("embeddings.txt")
    save_embeddings(emb, out)
    print(f"embeddings: {emb.vectors.shape}; epoch losses {[round(x, 4) for x in emb.losses]}")
    return [out]


def cmd_features(cfg: RunConfig) -> list[str]:
    g = load_graph(cfg)
    table = VertexFeatureTable.compute(g)
    out = cfg.path("features.txt")
    table.save(out)
    print(f"vertex features: {table.values.shape}")
    return [out]


def cmd_prepare(cfg: RunConfig) -> list[str]:
    g = load_graph(cfg)
    actions = load_log(cfg, g)
    specs = build_instances(g, actions)
    kept = filter_and_balance(specs, g, actions, cfg.min_active, cfg.neg_pos,
                              cfg.sub_seed("prep"))
    rest = 1.0 - cfg.train_fraction - cfg.valid_fraction
    parts = split(kept, (cfg.train_fraction, cfg.valid_fraction, rest), cfg.sub_seed("split"))
    flat = [s for part in parts for s in part]
    sampled = sample_all(g, flat, actions, cfg.n, cfg.restart, cfg.sub_seed("sample"))
    outputs, counts, start = [], {}, 0
    for name, part in zip(("train", "valid", "test"), parts):
        chunk = sampled[start:start + len(part)]
        start += len(part)
        path = cfg.path(f"{name}.jsonl")
        save_instances(chunk, path)
        outputs.append(path)
        pos = sum(s.label for s in part)
        counts[name] = {"positive": pos, "negative": len(part) - pos}
    pos = sum(c["positive"] for c in counts.values())
    neg = sum(c["negative"] for c in counts.values())
    summary = {"instances": len(kept), "positive": pos, "negative": neg,
               "ratio": round(neg / pos, 6), "candidates": len(specs), "splits": counts}
    write_json(cfg.path("prepare.json"), summary)
    outputs.append(cfg.path("prepare.json"))
    for name, c in counts.items():
        print(f"{name}: {c['positive']} positive / {c['negative']} negative")
    print(f"neg:pos ratio {neg / pos:.3f} over {len(kept)} instances")
    return outputs


def _model_inputs(cfg: RunConfig, g=None):
    g = load_graph(cfg) if g is None else g
    emb = load_embedding_matrix(cfg, g)
    table = load_feature_table(cfg) if cfg.use_vertex_features else None
    return g, emb, table


def _scaler_arrays(scaler: FeatureScaler | None) -> dict:
    if scaler is None:
        return {}
    return {"scaler.mean": scaler.mean, "scaler.std": scaler.std}


def _split_scaler(arrays: dict):
    if "scaler.mean" not in arrays:
        return None
    return FeatureScaler(arrays.pop("scaler.mean"), arrays.pop("scaler.std"))


def model_path(cfg: RunConfig) -> str:
    return cfg.path(f"model_{cfg.variant}.json")


def cmd_train(cfg: RunConfig) -> list[str]:
    mcfg = cfg.model_config()
    g, emb, table = _model_inputs(cfg)
    train_set, valid_set = load_split(cfg, "train"), load_split(cfg, "valid")
    scaler = fit_feature_scaler(train_set, table) if table is not None else None
    tr = encode_instances(train_set, emb, mcfg, table, scaler)
    va = encode_instances(valid_set, emb, mcfg, table, scaler)
    params, hist = train(mcfg, tr, va, emb=emb)
    arrays = {**snapshot(params), **_scaler_arrays(scaler)}
    save_checkpoint(model_path(cfg), arrays, mcfg.to_dict(), seed=cfg.seed)
    hist_doc = hist.to_dict()
    hist_doc.pop("seconds")
    hist_path = cfg.path(f"history_{cfg.variant}.json")
    write_json(hist_path, {"history": hist_doc, "seed": cfg.seed, "config": mcfg.to_dict()})
    print(f"{cfg.variant}: best epoch {hist.best_epoch}, valid loss "
          f"{min(hist.valid_loss):.4f}, valid AUC {hist.valid_auc[hist.best_epoch]:.4f} "
          f"({hist.stop_reason}, {hist.seconds:.1f}s)")
    return [model_path(cfg), hist_path]


def load_model(cfg: RunConfig):
    arrays, config, _ = load_checkpoint(_need(model_path(cfg), "train"))
    scaler = _split_scaler(arrays)
    mcfg = DeepInfConfig.from_dict(config)
    return params_from_arrays(arrays), mcfg, scaler


def cmd_eval(cfg: RunConfig) -> list[str]:
    params, mcfg, scaler = load_model(cfg)
    g, emb, table = _model_inputs(cfg)
    if mcfg.use_vertex_features and table is None:
        table = load_feature_table(cfg)
    instances = load_split(cfg, cfg.split)
    batch = encode_instances(instances, emb, mcfg, table, scaler)
    report = _report(batch.labels, predict(params, mcfg, batch), cfg.threshold)
    return _save_report(cfg, report, f"{cfg.variant}_{cfg.split}", mcfg.to_dict())


def _report(labels, scores, threshold) -> EvalReport:
    labels = np.asarray(labels)
    scores = np.asarray(scores, dtype=np.float64)
    p, r, f, counts = prf1(labels, scores, threshold)
    return EvalReport(auc(labels, scores), p, r, f, threshold, counts,
                      labels.tolist(), scores.tolist())


def _fingerprint(doc: dict) -> str:
    return f"{zlib.crc32(json.dumps(doc, sort_keys=True).encode()):08x}"


def _save_report(cfg: RunConfig, report: EvalReport, tag: str, model_cfg: dict) -> list[str]:
    rpath, spath = cfg.path(f"report_{tag}.json"), cfg.path(f"scores_{tag}.txt")
    report.save(rpath, seed=cfg.seed, config=model_cfg, fingerprint=_fingerprint(model_cfg))
    report.save_scores(spath)
    s = report.summary()
    print(f"{tag}: AUC {s['auc']:.4f}  P {s['precision']:.4f}  R {s['recall']:.4f}  F1 {s['f1']:.4f}")
    return [rpath, spath]


def cmd_baseline(cfg: RunConfig) -> list[str]:
    g = load_graph(cfg)
    emb = load_embedding_matrix(cfg, g)
    table = load_feature_table(cfg)
    parts = {name: load_split(cfg, name) for name in ("train", "valid", cfg.split)}
    kind = cfg.baseline.lower()
    if kind in ("lr", "svm"):
        xs = {name: baseline_features(inst, g, table, emb) for name, inst in parts.items()}
        ys = {name: np.array([i.label for i in inst]) for name, inst in parts.items()}
        outputs = []
        for name in xs:
            path = cfg.path(f"baseline_features_{name}.txt")
            save_baseline_features(path, xs[name], ys[name], baseline_columns(emb.shape[1]))
            outputs.append(path)
        scaler = FeatureScaler().fit(xs["train"])
        model = linear_train(scaler.transform(xs["train"]), ys["train"],
                             "logistic" if kind == "lr" else "hinge", cfg.l2,
                             cfg.linear_epochs, cfg.linear_lr, cfg.sub_seed(kind))
        scores = model.score(scaler.transform(xs[cfg.split]))
        threshold = model.threshold if kind == "svm" else cfg.threshold
        report = _report(ys[cfg.split], scores, threshold)
        ckpt = cfg.path(f"model_{kind}.json")
        save_checkpoint(ckpt, {**model.to_arrays(), "scaler.mean": scaler.mean,
                               "scaler.std": scaler.std},
                        {"kind": kind, "l2": cfg.l2, "epochs": cfg.linear_epochs,
                         "lr": cfg.linear_lr}, seed=cfg.seed)
        conf = {"baseline": kind, "l2": cfg.l2, "epochs": cfg.linear_epochs, "lr": cfg.linear_lr}
        return outputs + [ckpt] + _save_report(cfg, report, f"{kind}_{cfg.split}", conf)
    if kind == "pscn":
        pcfg = cfg.pscn_config()
        mcfg = cfg.model_config()
        scaler = fit_feature_scaler(parts["train"], table) if mcfg.use_vertex_features else None
        enc = {name: encode_instances(inst, emb, mcfg, table, scaler)
               for name, inst in parts.items()}
        xs = {name: pscn_encode(parts[name], enc[name], pcfg) for name in parts}
        params, hist = pscn_train(pcfg, xs["train"], enc["train"].labels,
                                  xs["valid"], enc["valid"].labels)
        ckpt = cfg.path("model_pscn.json")
        save_checkpoint(ckpt, snapshot(params), pcfg.to_dict(), seed=cfg.seed,
                        best_epoch=hist.best_epoch)
        report = _report(enc[cfg.split].labels, pscn_predict(params, pcfg, xs[cfg.split]),
                         cfg.threshold)
        return [ckpt] + _save_report(cfg, report, f"pscn_{cfg.split}", pcfg.to_dict())
    raise ConfigError(f"unknown baseline {cfg.baseline!r} (lr, svm or pscn)")


def _index_list(spec: str, size: int) -> list[int]:
    idx = [int(x) for x in spec.split(",") if x.strip()]
    bad = [i for i in idx if not 0 <= i < size]
    if bad:
        raise ConfigError(f"instance indices {bad} out of range for {size} instances")
    return idx


def attention_dot(record: dict, vertices, active, layer: int = 0) -> str:
    """Graph description of one instance; edge widths from head-averaged attention."""
    attn = record["layers"][layer]["attention"].mean(axis=0)
    support = record["support"]
    pad = record["pad"]
    ego = record["ego"]
    lines = ["graph instance {", "  node [shape=circle, style=filled];"]
    for i in np.flatnonzero(~pad):
        color = "gold" if i == ego else ("tomato" if active[i] else "lightgray")
        lines.append(f'  v{i} [label="{int(vertices[i])}", fillcolor={color}];')
    n = len(pad)
    for i in range(n):
        for j in range(i + 1, n):
            if support[i, j] and not pad[i] and not pad[j]:
                w = 0.5 * (attn[i, j] + attn[j, i])
                lines.append(f"  v{i} -- v{j} [penwidth={1 + 8 * w:.3f}, weight={w:.6f}];")
    lines.append("}")
    return "\n".join(lines) + "\n"


def cmd_attend(cfg: RunConfig) -> list[str]:
    params, mcfg, scaler = load_model(cfg)
    if mcfg.variant != "gat":
        raise UnsupportedVariantError("attention export needs a GAT checkpoint")
    g, emb, table = _model_inputs(cfg)
    if mcfg.use_vertex_features and table is None:
        table = load_feature_table(cfg)
    instances = load_split(cfg, cfg.split)
    chosen = _index_list(cfg.attend_instances, len(instances))
    picked = [instances[i] for i in chosen]
    batch = encode_instances(picked, emb, mcfg, table, scaler)
    records = attention_scores(params, mcfg, batch)
    outdir = cfg.path("attention")
    os.makedirs(outdir, exist_ok=True)
    outputs = []
    for idx, inst, rec in zip(chosen, picked, records):
        blocks = []
        for l, layer in enumerate(rec["layers"]):
            for h in range(layer["attention"].shape[0]):
                a = layer["attention"][h]
                rows, cols = np.nonzero(rec["support"])
                blocks.append({
                    "layer": l, "head": h,
                    "edges": [[int(i), int(j), float(a[i, j])] for i, j in zip(rows, cols)],
                    "scores": [[int(j), float(s)] for j, s in enumerate(layer["scores"][h])
                               if not rec["pad"][j]],
                })
        doc = {"instance": idx, "split": cfg.split, "ego": rec["ego"], "label": rec["label"],
               "vertices": [int(v) for v in inst.vertices], "heads": blocks}
        jpath = os.path.join(outdir, f"{cfg.split}_{idx}.json")
        write_json(jpath, doc)
        dpath = os.path.join(outdir, f"{cfg.split}_{idx}.dot")
        with open(dpath, "w") as fh:
            fh.write(attention_dot(rec, inst.vertices, inst.active))
        outputs += [jpath, dpath]
    print(f"exported attention for {len(chosen)} instance(s) to {outdir}")
    return outputs


SWEEP_AXES = ("restart", "n", "neg_pos", "heads")


def _sweep_values(cfg: RunConfig) -> list:
    kind = int if cfg.axis in ("n", "heads") else float
    try:
        return [kind(v) for v in cfg.values.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"bad sweep values {cfg.values!r}") from None


def cmd_sweep(cfg: RunConfig) -> list[str]:
    if cfg.axis not in SWEEP_AXES:
        raise ConfigError(f"sweep axis must be one of {SWEEP_AXES}")
    values = _sweep_values(cfg)
    for path, producer in ((cfg.graph_path, "synth"), (cfg.log_path, "synth"),
                           (cfg.embeddings_path, "embed"), (cfg.features_path, "features")):
        _need(path, producer)
    rows = []
    for value in values:
        cell_dir = cfg.path(os.path.join(f"sweep_{cfg.axis}", str(value)))
        os.makedirs(cell_dir, exist_ok=True)
        cell = dataclasses.replace(cfg, workdir=cell_dir, graph=cfg.graph_path, log=cfg.log_path,
                                   embeddings=cfg.embeddings_path, features=cfg.features_path)
        if cfg.axis == "heads":
            cell = dataclasses.replace(cell, heads=value, head_dim=cfg.hidden // value)
        else:
            cell = dataclasses.replace(cell, **{cfg.axis: value})
        row = {"value": value}
        if cfg.axis == "heads":
            row["head_dim"] = cell.hidden // value
        try:
            if cfg.axis == "heads" and os.path.exists(cfg.path("train.jsonl")):
                for name in ("train", "valid", "test"):
                    with open(cfg.path(f"{name}.jsonl")) as src, \
                            open(cell.path(f"{name}.jsonl"), "w") as dst:
                        dst.write(src.read())
            else:
                cmd_prepare(cell)
            cmd_train(cell)
            cmd_eval(dataclasses.replace(cell, split="test"))
            with open(cell.path(f"report_{cell.variant}_test.json")) as fh:
                metrics = json.load(fh)["metrics"]
            row.update(auc=metrics["auc"], f1=metrics["f1"], status="ok")
        except Exception as exc:  # record and continue with the next cell
            log.error("sweep cell %s=%s failed: %s", cfg.axis, value, exc)
            row.update(auc=None, f1=None, status=f"failed: {exc}")
        rows.append(row)
    path = cfg.path(f"sweep_{cfg.axis}.txt")
    with open(path, "w") as fh:
        fh.write(f"{cfg.axis:>10} {'auc':>8} {'f1':>8}  status\n")
        for r in rows:
            a = "nan" if r["auc"] is None else f"{r['auc']:.4f}"
            f = "nan" if r["f1"] is None else f"{r['f1']:.4f}"
            fh.write(f"{r['value']!s:>10} {a:>8} {f:>8}  {r['status']}\n")
    with open(path) as fh:
        print(fh.read(), end="")
    return [path]


HANDLERS = {"synth": cmd_synth, "embed": cmd_embed, "features": cmd_features,
            "prepare": cmd_prepare, "train": cmd_train, "eval": cmd_eval,
            "baseline": cmd_baseline, "attend": cmd_attend, "sweep": cmd_sweep}


def run(command: str, cfg: RunConfig) -> list[str]:
    os.makedirs(cfg.workdir, exist_ok=True)
    t0 = time.perf_counter()
    outputs = HANDLERS[command](cfg)
    write_manifest(cfg, command, outputs, time.perf_counter() - t0)
    return outputs


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else argv
    try:
        args, overrides = parse_args(argv)
    except ConfigError as exc:
        print(f"influlocal: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else 0
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        file_values = read_config_file(args.config) if args.config else {}
        cfg = build_config(file_values, overrides)
        run(args.command, cfg)
    except (ConfigError, UnsupportedVariantError) as exc:
        print(f"influlocal: configuration error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        print(f"influlocal: {exc}", file=sys.stderr)
        return EXIT_MISSING
    except (GraphError, EmptyDatasetError, SamplingError, UndefinedMetricError, ValueError) as exc:
        print(f"influlocal: data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except TrainingDivergedError as exc:
        print(f"influlocal: training diverged: {exc}", file=sys.stderr)
        return EXIT_TRAINING
    return 0


if __name__ == "__main__":
    sys.exit(main())
