"""Per-type revenue models: CART regression trees and LASSO linear models."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .auction import ItemMultiset
from .features import Dataset, FeatureRow, FeatureSchema, PrefixState

SCHEMA_VERSION = 1


class UndefinedScoreError(ValueError):
    pass


# -- regression tree -------------------------------------------------------------

@dataclass
class TreeNode:
    """Internal node when ``feature`` is set (test ``x[feature] <= threshold``), else leaf."""

    value: float = 0.0
    feature: int | None = None
    threshold: float = 0.0
    left: "TreeNode | None" = None
    right: "TreeNode | None" = None
    n_samples: int = 0

    @property
    def is_leaf(self) -> bool:
        return self.feature is None


class RegressionTree:
    """Binary regression tree; ``f <= c`` sends a row to the left child."""

    kind = "tree"

    def __init__(self, schema: FeatureSchema, root: TreeNode, type_id: int | None = None,
                 max_depth: int | None = None, min_samples_split: int | None = None):
        self.schema = schema
        self.root = root
        self.type_id = type_id
        self.max_depth = max_depth
        self.min_samples_split = min_samples_split
        self._flatten()

    def _flatten(self):
        # nodes in preorder; leaves numbered 1.. from left to right
        self.feat, self.thr, self.lo, self.hi, self.val = [], [], [], [], []
        self.leaf_id: list[int] = []
        self.leaf_values: list[float] = []

        def walk(node):
            k = len(self.feat)
            self.feat.append(-1 if node.is_leaf else node.feature)
            self.thr.append(node.threshold)
            self.lo.append(-1); self.hi.append(-1)
            self.val.append(node.value)
            if node.is_leaf:
                self.leaf_values.append(node.value)
                self.leaf_id.append(len(self.leaf_values))
            else:
                self.leaf_id.append(0)
                self.lo[k] = walk(node.left)
                self.hi[k] = walk(node.right)
            return k

        walk(self.root)

    def predict(self, x: Sequence[float]) -> float:
        feat, thr, lo, hi = self.feat, self.thr, self.lo, self.hi
        k = 0
        while feat[k] >= 0:
            k = lo[k] if x[feat[k]] <= thr[k] else hi[k]
        return self.val[k]

    def leaf_of(self, x: Sequence[float]) -> int:
        """1-based id of the leaf that ``x`` reaches."""
        k = 0
        while self.feat[k] >= 0:
            k = self.lo[k] if x[self.feat[k]] <= self.thr[k] else self.hi[k]
        return self.leaf_id[k]

    def predict_interval(self, lo: Sequence[float], hi: Sequence[float]) -> tuple[float, float]:
        """Min and max leaf value reachable when each feature lies in [lo, hi]."""
        feat, thr, left, right, val = self.feat, self.thr, self.lo, self.hi, self.val
        best_lo, best_hi = np.inf, -np.inf
        stack = [0]
        while stack:
            k = stack.pop()
            f = feat[k]
            if f < 0:
                v = val[k]
                if v < best_lo:
                    best_lo = v
                if v > best_hi:
                    best_hi = v
                continue
            if lo[f] <= thr[k]:
                stack.append(left[k])
            if hi[f] > thr[k]:
                stack.append(right[k])
        return best_lo, best_hi

    def decision_nodes(self):
        """Yield (feature, threshold, left leaf ids, right leaf ids) per internal node."""
        def leaves(k):
            if self.feat[k] < 0:
                return [self.leaf_id[k]]
            return leaves(self.lo[k]) + leaves(self.hi[k])

        for k, f in enumerate(self.feat):
            if f >= 0:
                yield f, self.thr[k], leaves(self.lo[k]), leaves(self.hi[k])

    @property
    def used_features(self) -> set[int]:
        return {f for f in self.feat if f >= 0}

    def depth(self) -> int:
        def d(node):
            return 0 if node.is_leaf else 1 + max(d(node.left), d(node.right))
        return d(self.root)

    def to_dict(self) -> dict:
        def enc(node):
            if node.is_leaf:
                return {"leaf": node.value, "n": node.n_samples}
            return {"feature": self.schema.names[node.feature], "threshold": node.threshold,
                    "n": node.n_samples, "left": enc(node.left), "right": enc(node.right)}
        return {"schema_version": SCHEMA_VERSION, "kind": "tree", "type": self.type_id,
                "types": list(self.schema.type_ids), "max_depth": self.max_depth,
                "min_samples_split": self.min_samples_split, "root": enc(self.root)}


def _best_split(X: np.ndarray, y: np.ndarray):
    """Lowest children SSE over all midpoint thresholds.

    Ties go to the lowest feature index, then the lowest threshold.
    """
    n = len(y)
    best = (np.inf, -1, 0.0)
    scale = 1e-9 * max(1.0, float(np.sum((y - y.mean()) ** 2)))
    for f in range(X.shape[1]):
        col = X[:, f]
        order = np.argsort(col, kind="stable")
        xs, ys = col[order], y[order]
        cut = np.nonzero(xs[1:] > xs[:-1])[0]
        if cut.size == 0:
            continue
        cs = np.cumsum(ys)
        cs2 = np.cumsum(ys * ys)
        nl = cut + 1.0
        nr = n - nl
        sl, sl2 = cs[cut], cs2[cut]
        sr, sr2 = cs[-1] - sl, cs2[-1] - sl2
        sse = (sl2 - sl * sl / nl) + (sr2 - sr * sr / nr)
        j = int(np.argmin(sse))
        # first index within tolerance of the minimum keeps the lowest threshold
        j = int(np.nonzero(sse <= sse[j] + scale)[0][0])
        if sse[j] < best[0] - scale:
            best = (float(sse[j]), f, (xs[cut[j]] + xs[cut[j] + 1]) / 2.0)
    return best


def _grow(X, y, depth, max_depth, min_samples_split) -> TreeNode:
    node = TreeNode(value=round(float(y.mean()), 2), n_samples=len(y))
    if depth >= max_depth or len(y) < min_samples_split:
        return node
    sse_parent = float(np.sum((y - y.mean()) ** 2))
    if sse_parent <= 1e-12 * max(1.0, float(np.sum(y * y))):
        return node
    sse, f, c = _best_split(X, y)
    if f < 0 or sse_parent - sse <= 1e-12 * max(1.0, sse_parent):
        return node
    mask = X[:, f] <= c
    node.feature, node.threshold = f, float(c)
    node.left = _grow(X[mask], y[mask], depth + 1, max_depth, min_samples_split)
    node.right = _grow(X[~mask], y[~mask], depth + 1, max_depth, min_samples_split)
    return node


def fit_tree(rows: Sequence[FeatureRow], schema: FeatureSchema, max_depth: int,
             min_samples_split: int = 10, type_id: int | None = None) -> RegressionTree:
    """Greedy CART fit; leaves predict the row mean rounded to 2 decimals."""
    if not rows:
        raise ValueError("cannot fit a tree on an empty dataset")
    X, y = Dataset(schema).matrix(rows)
    root = _grow(X, y, 0, max_depth, min_samples_split)
    if type_id is None:
        type_id = rows[0].type_id
    return RegressionTree(schema, root, type_id, max_depth, min_samples_split)


# -- LASSO -------------------------------------------------------------------------

class LinearModel:
    kind = "linear"

    def __init__(self, schema: FeatureSchema, coefs: Mapping[int, float], intercept: float,
                 alpha: float = 0.0, type_id: int | None = None):
        self.schema = schema
        self.coefs = {int(f): float(c) for f, c in sorted(coefs.items()) if c != 0.0}
        self.intercept = float(intercept)
        self.alpha = alpha
        self.type_id = type_id
        self._terms = tuple(self.coefs.items())

    def predict(self, x: Sequence[float]) -> float:
        v = self.intercept
        for f, c in self._terms:
            v += c * x[f]
        return v

    def predict_interval(self, lo: Sequence[float], hi: Sequence[float]) -> tuple[float, float]:
        a = b = self.intercept
        for f, c in self._terms:
            if c > 0:
                a += c * lo[f]; b += c * hi[f]
            else:
                a += c * hi[f]; b += c * lo[f]
        return a, b

    @property
    def used_features(self) -> set[int]:
        return set(self.coefs)

    def to_dict(self) -> dict:
        return {"schema_version": SCHEMA_VERSION, "kind": "linear", "type": self.type_id,
                "types": list(self.schema.type_ids), "alpha": self.alpha,
                "intercept": self.intercept,
                "coefficients": {self.schema.names[f]: c for f, c in self.coefs.items()}}


def lasso_objective(coef: np.ndarray, intercept: float, X: np.ndarray, y: np.ndarray, alpha: float) -> float:
    r = X @ coef + intercept - y
    return float(r @ r / (2 * len(y)) + alpha * np.abs(coef).sum())


def lasso_cd(X: np.ndarray, y: np.ndarray, alpha: float, tol: float = 1e-4,
             max_sweeps: int = 1000, callback=None) -> tuple[np.ndarray, float, int]:
    """Cyclic coordinate descent for 1/(2k)||y - Xc - d||^2 + alpha*|c|_1.

    The intercept is unpenalised and eliminated by centring. Works on the
    Gram matrix, so one coordinate update costs O(n_features).
    Returns (coefficients, intercept, sweeps).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    k, m = X.shape
    xm, ym = X.mean(axis=0), y.mean()
    Xc, yc = X - xm, y - ym
    G = Xc.T @ Xc / k
    b = Xc.T @ yc / k
    diag = np.diag(G).copy()
    c = np.zeros(m)
    Gc = np.zeros(m)  # G @ c, kept current
    sweeps = 0
    for sweeps in range(1, max_sweeps + 1):
        max_step = 0.0
        for j in range(m):
            if diag[j] <= 1e-14:
                continue
            rho = b[j] - Gc[j] + diag[j] * c[j]
            new = np.sign(rho) * max(abs(rho) - alpha, 0.0) / diag[j]
            step = new - c[j]
            if step != 0.0:
                Gc += G[:, j] * step
                c[j] = new
                max_step = max(max_step, abs(step))
        if callback is not None:
            callback(c.copy(), float(ym - xm @ c))
        if max_step < tol:
            break
    return c, float(ym - xm @ c), sweeps


def fit_lasso(rows: Sequence[FeatureRow], schema: FeatureSchema, alpha: float,
              type_id: int | None = None, tol: float = 1e-4, max_sweeps: int = 1000) -> LinearModel:
    """LASSO on raw (unstandardised) features."""
    if len(rows) < 2:
        raise ValueError("LASSO needs at least two rows")
    if alpha < 0:
        raise ValueError("alpha must be non-negative")
    X, y = Dataset(schema).matrix(rows)
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise ValueError("non-finite feature values")
    c, d, _ = lasso_cd(X, y, alpha, tol, max_sweeps)
    if type_id is None:
        type_id = rows[0].type_id
    return LinearModel(schema, dict(enumerate(c)), d, alpha, type_id)


def constant_model(schema: FeatureSchema, value: float = 0.0, type_id: int | None = None) -> RegressionTree:
    """Single-leaf tree, used for types that never occur in training data."""
    return RegressionTree(schema, TreeNode(value=round(value, 2)), type_id, 0, None)


# -- shared API ------------------------------------------------------------------

def predict(model, row: FeatureRow | Sequence[float]) -> float:
    if isinstance(row, FeatureRow):
        row = model.schema.vector(row)
    return model.predict(row)


def r_squared(predictions: Sequence[float], observations: Sequence[float]) -> float:
    p = np.asarray(predictions, dtype=float)
    v = np.asarray(observations, dtype=float)
    if p.shape != v.shape or p.size == 0:
        raise ValueError("predictions and observations must have equal nonzero length")
    den = float(np.sum((v - v.mean()) ** 2))
    if den == 0.0:
        raise UndefinedScoreError("observations have zero variance")
    return 1.0 - float(np.sum((v - p) ** 2)) / den


def _schema_of(models: Mapping[int, object]) -> FeatureSchema:
    schemas = {m.schema for m in models.values() if hasattr(m, "schema")}
    if len(schemas) != 1:
        raise ValueError("models must share one feature schema")
    return schemas.pop()


def predict_ordering(models: Mapping[int, object], ordering: Sequence[int],
                     multiset: ItemMultiset | None = None,
                     schema: FeatureSchema | None = None) -> list[float]:
    """Per-item predictions, feeding each prediction back into the ``sum`` features."""
    if not ordering:
        return []
    multiset = multiset or ItemMultiset.from_sequence(ordering)
    if not multiset.is_ordering(ordering):
        raise ValueError("ordering is inconsistent with the multiset")
    st = PrefixState(schema or _schema_of(models), multiset)
    out = []
    for r in ordering:
        v = models[r].predict(st.vector(r))
        out.append(v)
        st.advance(r, v)
    return out


def evaluate_ordering(models: Mapping[int, object], ordering: Sequence[int],
                      multiset: ItemMultiset | None = None,
                      schema: FeatureSchema | None = None) -> float:
    total = 0.0
    for v in predict_ordering(models, ordering, multiset, schema):
        total += v
    return total


# -- persistence -------------------------------------------------------------------

def model_from_dict(d: Mapping):
    if d.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version {d.get('schema_version')!r}")
    schema = FeatureSchema(d["types"])
    if d["kind"] == "tree":
        def dec(e):
            if "leaf" in e:
                return TreeNode(value=float(e["leaf"]), n_samples=int(e.get("n", 0)))
            return TreeNode(feature=schema.index_of[e["feature"]], threshold=float(e["threshold"]),
                            n_samples=int(e.get("n", 0)), left=dec(e["left"]), right=dec(e["right"]))
        return RegressionTree(schema, dec(d["root"]), d.get("type"), d.get("max_depth"),
                              d.get("min_samples_split"))
    if d["kind"] == "linear":
        coefs = {schema.index_of[name]: float(c) for name, c in d["coefficients"].items()}
        return LinearModel(schema, coefs, float(d["intercept"]), float(d["alpha"]), d.get("type"))
    raise ValueError(f"unknown model kind {d['kind']!r}")


def models_to_dict(models: Mapping[int, object], name: str = "") -> dict:
    return {"schema_version": SCHEMA_VERSION, "name": name,
            "models": {str(r): m.to_dict() for r, m in sorted(models.items())}}


def models_from_dict(d: Mapping) -> dict[int, object]:
    return {int(r): model_from_dict(m) for r, m in d["models"].items()}


@dataclass
class ModelSpec:
    """A model family member such as ``tree5`` or ``lasso2``."""

    name: str
    kind: str
    depth: int = 0
    alpha: float = 0.0
    min_samples_split: int = 10


def fit_models(dataset: Dataset, spec: ModelSpec, type_ids: Sequence[int] | None = None) -> dict[int, object]:
    """One model per type; types without (enough) rows get a constant model."""
    out = {}
    for r in (type_ids or dataset.schema.type_ids):
        rows = dataset.for_type(r)
        if spec.kind == "tree":
            out[r] = fit_tree(rows, dataset.schema, spec.depth, spec.min_samples_split, r) if rows \
                else constant_model(dataset.schema, 0.0, r)
        else:
            out[r] = fit_lasso(rows, dataset.schema, spec.alpha, r) if len(rows) >= 2 \
                else constant_model(dataset.schema, rows[0].observed_value if rows else 0.0, r)
    return out
