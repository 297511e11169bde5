"""k-means, product quantization, and the IVF-PQ coarse/fine index."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DistanceMetric, batch_distances

_PQ_CENTROIDS = 256
_PQ_TRAIN_CAP = 16384  # subsample cap for codebook training


@dataclass(frozen=True)
class KMeansModel:
    centroids: np.ndarray  # (k_c, d) float32

    @property
    def k(self) -> int:
        return self.centroids.shape[0]

    def assign(self, points: np.ndarray) -> np.ndarray:
        return _nearest_centroid(points, self.centroids)


def _sq_dists_to_centroids(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    p = points.astype(np.float64)
    c = centroids.astype(np.float64)
    # ||p - c||^2 = ||p||^2 - 2 p.c + ||c||^2, chunked to bound memory
    out = np.empty((p.shape[0], c.shape[0]))
    c_norms = np.einsum("ij,ij->i", c, c)
    step = max(1, 2_000_000 // max(c.shape[0], 1))
    for s in range(0, p.shape[0], step):
        block = p[s : s + step]
        out[s : s + step] = (
            np.einsum("ij,ij->i", block, block)[:, None] - 2.0 * block @ c.T + c_norms[None, :]
        )
    np.maximum(out, 0.0, out=out)  # the expansion can go slightly negative
    return out


def _nearest_centroid(points: np.ndarray, centroids: np.ndarray) -> np.ndarray:
    return np.argmin(_sq_dists_to_centroids(points, centroids), axis=1).astype(np.int64)


def kmeans(points: np.ndarray, k_c: int, max_iterations: int = 25, seed: int = 0) -> KMeansModel:
    """Lloyd iterations from k-means++ seeding.

    The objective is non-increasing per iteration; clusters that empty out
    are re-seeded from the point farthest from its assigned centroid.
    """
    points = np.ascontiguousarray(points, dtype=np.float32)
    n = points.shape[0]
    if k_c == 0:
        raise ValueError("k_c must be >= 1")
    if k_c > n:
        raise ValueError(f"k_c={k_c} exceeds point count {n}")
    rng = np.random.Generator(np.random.PCG64(seed))

    centroids = _kmeanspp_seed(points, k_c, rng)
    for _ in range(max_iterations):
        d2 = _sq_dists_to_centroids(points, centroids)
        assign = np.argmin(d2, axis=1)
        new_centroids = centroids.copy()
        own_dist = d2[np.arange(n), assign].copy()
        for c in range(k_c):
            members = assign == c
            if members.any():
                new_centroids[c] = points[members].mean(axis=0)
            else:
                farthest = int(np.argmax(own_dist))
                new_centroids[c] = points[farthest]
                assign[farthest] = c
                own_dist[farthest] = -1.0
        if np.array_equal(new_centroids, centroids):
            break
        centroids = new_centroids
    return KMeansModel(centroids=centroids.astype(np.float32))


def _kmeanspp_seed(points: np.ndarray, k_c: int, rng) -> np.ndarray:
    n = points.shape[0]
    chosen = np.empty(k_c, dtype=np.int64)
    chosen[0] = rng.integers(n)
    best = _sq_dists_to_centroids(points, points[chosen[:1]]).ravel()
    for t in range(1, k_c):
        total = best.sum()
        if total <= 0:
            chosen[t] = rng.integers(n)
        else:
            chosen[t] = rng.choice(n, p=best / total)
        cand = _sq_dists_to_centroids(points, points[chosen[t] : chosen[t] + 1]).ravel()
        np.minimum(best, cand, out=best)
    return points[chosen].astype(np.float32).copy()


def kmeans_objective(points: np.ndarray, model: KMeansModel) -> float:
    d2 = _sq_dists_to_centroids(points, model.centroids)
    return float(d2.min(axis=1).sum())


@dataclass(frozen=True)
class PQCodebook:
    """Per-subspace centroid tables: (m, 256, d // m) float32."""

    tables: np.ndarray

    @property
    def m(self) -> int:
        return self.tables.shape[0]

    @property
    def sub_dim(self) -> int:
        return self.tables.shape[2]

    def encode(self, vectors: np.ndarray) -> np.ndarray:
        vectors = np.ascontiguousarray(vectors, dtype=np.float32)
        n = vectors.shape[0]
        codes = np.empty((n, self.m), dtype=np.uint8)
        for j in range(self.m):
            sub = vectors[:, j * self.sub_dim : (j + 1) * self.sub_dim]
            codes[:, j] = _nearest_centroid(sub, self.tables[j]).astype(np.uint8)
        return codes

    def decode(self, codes: np.ndarray) -> np.ndarray:
        n = codes.shape[0]
        out = np.empty((n, self.m * self.sub_dim), dtype=np.float32)
        for j in range(self.m):
            out[:, j * self.sub_dim : (j + 1) * self.sub_dim] = self.tables[j][codes[:, j]]
        return out


def pq_train_encode(
    vectors: np.ndarray, m: int, seed: int = 0, max_iterations: int = 15
) -> tuple[PQCodebook, np.ndarray]:
    """Train a per-subspace 256-centroid codebook and encode every vector."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n, d = vectors.shape
    if m < 1 or d % m != 0:
        raise ValueError(f"m={m} must divide the dimension {d}")
    sub_dim = d // m
    if sub_dim < 1:
        raise ValueError(f"subspace dimension {d}/{m} < 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    train = vectors
    if n > _PQ_TRAIN_CAP:
        train = vectors[rng.choice(n, _PQ_TRAIN_CAP, replace=False)]
    tables = np.empty((m, _PQ_CENTROIDS, sub_dim), dtype=np.float32)
    for j in range(m):
        sub = train[:, j * sub_dim : (j + 1) * sub_dim]
        k_c = min(_PQ_CENTROIDS, sub.shape[0])
        model = kmeans(sub, k_c, max_iterations=max_iterations, seed=seed + j)
        tables[j, :k_c] = model.centroids
        if k_c < _PQ_CENTROIDS:
            tables[j, k_c:] = model.centroids[0]
    book = PQCodebook(tables=tables)
    return book, book.encode(vectors)


def adc_table(codebook: PQCodebook, query: np.ndarray, metric: DistanceMetric) -> np.ndarray:
    """Per-subspace query-to-centroid partial distances, (m, 256) float32."""
    query = np.asarray(query, dtype=np.float32)
    m, sub_dim = codebook.m, codebook.sub_dim
    if query.shape[0] != m * sub_dim:
        raise ValueError(f"query dimension {query.shape[0]} != {m * sub_dim}")
    table = np.empty((m, _PQ_CENTROIDS), dtype=np.float32)
    for j in range(m):
        qs = query[j * sub_dim : (j + 1) * sub_dim].astype(np.float64)
        cs = codebook.tables[j].astype(np.float64)
        if metric is DistanceMetric.SQUARED_EUCLIDEAN:
            diff = cs - qs
            table[j] = np.einsum("ij,ij->i", diff, diff)
        else:
            table[j] = -(cs @ qs)
    return table


def adc_distance(codebook: PQCodebook, query: np.ndarray, code: np.ndarray,
                 metric: DistanceMetric = DistanceMetric.SQUARED_EUCLIDEAN) -> float:
    """Lookup-table distance between a raw query and one PQ code."""
    code = np.asarray(code)
    if code.shape[0] != codebook.m:
        raise ValueError(f"code length {code.shape[0]} != m={codebook.m}")
    table = adc_table(codebook, query, metric)
    return float(table[np.arange(codebook.m), code].sum(dtype=np.float64))


def adc_distances(table: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """Batch ADC evaluation of `codes` (n, m) against a prebuilt table."""
    m = table.shape[0]
    acc = np.zeros(codes.shape[0], dtype=np.float64)
    for j in range(m):
        acc += table[j, codes[:, j]]
    return acc


@dataclass(frozen=True)
class IVFPQIndex:
    """Coarse k-means lists with residual-encoded PQ codes per member."""

    coarse: KMeansModel
    codebook: PQCodebook
    list_ids: list[np.ndarray]      # per-list record ids, ascending
    list_codes: list[np.ndarray]    # per-list (len, m) uint8 codes
    residual: bool = True

    @property
    def nlist(self) -> int:
        return self.coarse.k


def ivfpq_build(vectors: np.ndarray, nlist: int, m: int, seed: int = 0) -> IVFPQIndex:
    """Coarse-assign, then PQ-encode residuals against the list centroid."""
    vectors = np.ascontiguousarray(vectors, dtype=np.float32)
    n = vectors.shape[0]
    if nlist > n:
        raise ValueError(f"nlist={nlist} exceeds n={n}")
    coarse = kmeans(vectors, nlist, seed=seed)
    assign = coarse.assign(vectors)
    residuals = vectors - coarse.centroids[assign]
    codebook, codes = pq_train_encode(residuals, m, seed=seed)
    list_ids, list_codes = [], []
    for c in range(nlist):
        ids = np.nonzero(assign == c)[0].astype(np.int64)
        list_ids.append(ids)
        list_codes.append(codes[ids])
    return IVFPQIndex(coarse=coarse, codebook=codebook, list_ids=list_ids, list_codes=list_codes)


def ivfpq_scan(
    index: IVFPQIndex,
    query: np.ndarray,
    nprobe: int,
    metric: DistanceMetric,
) -> tuple[np.ndarray, np.ndarray]:
    """ADC-rank the members of the `nprobe` nearest lists.

    Returns (ids, adc_dists) sorted ascending by the approximate distance,
    ties by id. With residual encoding the table is rebuilt per probed
    list against the query residual.
    """
    query = np.asarray(query, dtype=np.float32)
    cd = batch_distances(metric, query, index.coarse.centroids)
    probe_order = np.lexsort((np.arange(index.nlist), cd))[:nprobe]
    ip_table = None
    if metric is DistanceMetric.INNER_PRODUCT_DISTANCE:
        # -<q, c + r> = -<q, c> - <q, r>; the residual table is list-independent
        ip_table = adc_table(index.codebook, query, metric)
    all_ids, all_d = [], []
    for c in probe_order:
        ids = index.list_ids[c]
        if ids.size == 0:
            continue
        if ip_table is not None:
            all_d.append(adc_distances(ip_table, index.list_codes[c]) + cd[c])
        else:
            residual_q = query - index.coarse.centroids[c]
            table = adc_table(index.codebook, residual_q, metric)
            all_d.append(adc_distances(table, index.list_codes[c]))
        all_ids.append(ids)
    if not all_ids:
        return np.empty(0, dtype=np.int64), np.empty(0)
    ids = np.concatenate(all_ids)
    dists = np.concatenate(all_d)
    order = np.lexsort((ids, dists))
    return ids[order], dists[order]
