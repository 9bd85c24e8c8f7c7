import math

import numpy as np
import pytest

from src.indices import create_index, parse_index_ids, score_many
from src.models import ALL_INDICES, IndexId
from src.validity import (
    CloudGeometry,
    bezdek,
    calinski_harabasz,
    cvi_bundle,
    davies_bouldin_star,
    dunn,
    silhouette,
    thornton,
)

from .conftest import make_cloud


def test_two_cluster_fixture(two_cluster_1d):
    bundle = cvi_bundle(two_cluster_1d)
    assert bundle.sh == pytest.approx(0.79798, abs=1e-4)
    assert bundle.ch == pytest.approx(50.0, abs=1e-4)
    assert bundle.dn == pytest.approx(4.0, abs=1e-4)
    assert bundle.bz == pytest.approx(5.0, abs=1e-4)
    assert bundle.db_star == pytest.approx(0.8333, abs=1e-4)
    assert bundle.db == pytest.approx(0.2, abs=1e-12)
    assert bundle.th == 1.0


def test_shared_geometry_gives_same_values(gaussian_groups):
    geometry = CloudGeometry.of(gaussian_groups)
    assert geometry.matches(gaussian_groups)
    assert silhouette(gaussian_groups, geometry) == silhouette(gaussian_groups)
    assert dunn(gaussian_groups, geometry) == dunn(gaussian_groups)
    assert bezdek(gaussian_groups, geometry) == pytest.approx(bezdek(gaussian_groups))
    assert thornton(gaussian_groups, geometry) == thornton(gaussian_groups)


def test_silhouette_matches_brute_force(gaussian_groups):
    points, labels = gaussian_groups.points, np.array(gaussian_groups.labels)
    per_cluster = []
    for label in sorted(set(labels)):
        values = []
        for i in np.flatnonzero(labels == label):
            dist = np.linalg.norm(points - points[i], axis=1)
            own = labels == label
            a = dist[own].sum() / (own.sum() - 1)
            b = min(dist[labels == other].mean() for other in set(labels) if other != label)
            values.append((b - a) / max(a, b))
        per_cluster.append(np.mean(values))
    assert silhouette(gaussian_groups) == pytest.approx(np.mean(per_cluster), abs=1e-12)


def test_silhouette_singleton_cluster_contributes_zero():
    cloud = make_cloud([[0.0], [1.0], [10.0]], ["a", "a", "b"])
    # cluster a: samples 0 and 1 with b-distances 10 and 9
    cluster_a = np.mean([(10.0 - 1.0) / 10.0, (9.0 - 1.0) / 9.0])
    assert silhouette(cloud) == pytest.approx((cluster_a + 0.0) / 2.0)


def test_all_singleton_clusters():
    cloud = make_cloud([[0.0], [1.0], [3.0]], ["a", "b", "c"])
    assert silhouette(cloud) == 0.0
    assert math.isinf(calinski_harabasz(cloud))


def _rotation(angle: float) -> np.ndarray:
    return np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])


@pytest.mark.parametrize("angle,shift", [(0.7, (0.0, 0.0)), (0.0, (3.0, -2.0)), (2.1, (-40.0, 12.5))])
def test_cvis_invariant_under_rigid_motion(gaussian_groups, angle, shift):
    moved = make_cloud(gaussian_groups.points @ _rotation(angle).T + np.array(shift), gaussian_groups.labels)
    before, after = cvi_bundle(gaussian_groups), cvi_bundle(moved)
    for name in ("sh", "ch", "dn", "bz", "db_star", "th"):
        assert getattr(after, name) == pytest.approx(getattr(before, name), rel=1e-9), name


def test_thornton_counts_nearest_neighbour_agreement():
    cloud = make_cloud([[0.0], [1.0], [1.6], [3.0]], ["a", "a", "b", "b"])
    # nearest neighbours: 0->1 (a,a) 1->2 (a,b) 2->1 (b,a) 3->2 (b,b)
    assert thornton(cloud) == 0.5


def test_thornton_ties_go_to_lowest_row():
    cloud = make_cloud([[0.0], [1.0], [2.0]], ["a", "b", "a"])
    # point 1 is equidistant to 0 and 2, both label a
    assert CloudGeometry.of(cloud).nearest_neighbour[1] == 0


def test_identical_points_guards():
    cloud = make_cloud([[1.0], [1.0], [1.0], [1.0]], ["a", "a", "b", "b"])
    assert calinski_harabasz(cloud) == 0.0
    assert dunn(cloud) == 0.0
    assert bezdek(cloud) == 0.0
    db, db_star = davies_bouldin_star(cloud)
    assert math.isinf(db)
    assert db_star == 0.0
    assert silhouette(cloud) == 0.0


def test_collapsed_clusters_diverge():
    cloud = make_cloud([[0.0], [0.0], [5.0], [5.0]], ["a", "a", "b", "b"])
    assert math.isinf(calinski_harabasz(cloud))
    assert math.isinf(dunn(cloud))
    assert math.isinf(bezdek(cloud))
    score = create_index(IndexId.DN).score(cloud)
    assert score.diverged


def _collapsed_groups(epsilon: float):
    rng = np.random.default_rng(5)
    centres = np.array([[0.0, 0.0], [3.0, 0.0], [0.0, 3.0]])
    points, labels = [], []
    for k, centre in enumerate(centres):
        directions = rng.normal(size=(50, 2))
        directions /= np.linalg.norm(directions, axis=1, keepdims=True)
        radii = rng.uniform(0.1, 1.0, size=(50, 1))
        points.append(centre + epsilon * radii * directions)
        labels += [f"c{k}"] * 50
    return make_cloud(np.vstack(points), labels)


def test_shrinking_clusters_inflate_unbounded_indices_only():
    loose, tight = _collapsed_groups(1e-2), _collapsed_groups(1e-3)
    indices = [create_index(index_id) for index_id in ALL_INDICES]
    before, after = score_many(loose, indices), score_many(tight, indices)
    for index_id in (IndexId.DN, IndexId.BZ, IndexId.CH):
        assert after[index_id].value > before[index_id].value
    for scores in (before, after):
        assert scores[IndexId.PSI_ROC].value == 1.0
        assert scores[IndexId.PSI_PR].value == 1.0
        assert scores[IndexId.TH].value == 1.0


def test_bounded_indices_stay_in_range(gaussian_groups):
    scores = score_many(gaussian_groups, [create_index(index_id) for index_id in ALL_INDICES])
    for index_id, score in scores.items():
        bounds = index_id.bounded_range
        if bounds is not None:
            assert bounds[0] <= score.value <= bounds[1]


@pytest.mark.parametrize(
    "text, expected",
    [
        ("psi-roc,th", [IndexId.PSI_ROC, IndexId.TH]),
        ("th,psi-roc", [IndexId.PSI_ROC, IndexId.TH]),
        ("db*", [IndexId.DB_STAR]),
        ("DB_STAR", [IndexId.DB_STAR]),
        ("all", list(ALL_INDICES)),
    ],
)
def test_parse_index_ids(text, expected):
    assert parse_index_ids(text) == expected


def test_parse_index_ids_rejects_unknown():
    with pytest.raises(ValueError):
        parse_index_ids("psi-roc,silhouette2")


def test_score_many_matches_single_scorers(gaussian_groups):
    indices = [create_index(index_id, "mean") for index_id in ALL_INDICES]
    together = score_many(gaussian_groups, indices)
    for index in indices:
        assert index.score(gaussian_groups).value == pytest.approx(together[index.index_id].value, rel=1e-12)
