import numpy as np
import pytest

from trievolve import (
    DatasetFormatError,
    ExpressionTensor,
    RegionOverlapError,
    SyntheticSpec,
    TriclusterCoords,
    export_csv,
    generate_synthetic,
    impute_missing,
    limit_genes,
    load_dataset,
    msr3d,
    normalize_minmax,
)

from conftest import make_tensor


def write_csv(path, rows, header="gene,condition,time,value"):
    path.write_text(header + "\n" + "\n".join(rows) + ("\n" if rows else ""))
    return path


class TestLoadDataset:
    def test_direct_readback(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.1", "a,x,2,0.2", "a,x,3,0.3"])
        t = load_dataset(p)
        assert t.shape == (1, 1, 3)
        assert t.gene_ids == ("a",)
        assert t.condition_ids == ("x",)
        assert t.time_labels == ("1", "2", "3")
        assert t.values[0, 0].tolist() == [0.1, 0.2, 0.3]
        assert t.n_missing() == 0

    def test_empty_value_marks_missing(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.1", "a,x,2,", "a,x,3,0.3"])
        t = load_dataset(p)
        assert t.missing_mask[0, 0].tolist() == [False, True, False]

    def test_absent_triple_marks_missing(self, tmp_path):
        rows = ["a,x,1,0.1", "a,x,2,0.2", "b,x,2,0.4"]
        t = load_dataset(write_csv(tmp_path / "d.csv", rows))
        assert t.shape == (2, 1, 2)
        assert bool(t.missing_mask[1, 0, 0]) is True  # b,x,1 never appeared

    def test_yeast_scale_shape(self, tmp_path):
        rows = [
            f"g{g},c{c},{t},{0.001 * (g + c + t)}"
            for g in range(200)
            for c in range(4)
            for t in range(14)
        ]
        t = load_dataset(write_csv(tmp_path / "big.csv", rows))
        assert t.shape == (200, 4, 14)

    def test_axis_order_first_appearance_and_time_sort(self, tmp_path):
        rows = [
            "b,y,10,1.0", "b,y,2,2.0",
            "a,y,10,3.0", "a,y,2,4.0",
            "b,x,10,5.0", "b,x,2,6.0",
            "a,x,10,7.0", "a,x,2,8.0",
        ]
        t = load_dataset(write_csv(tmp_path / "d.csv", rows))
        assert t.gene_ids == ("b", "a")
        assert t.condition_ids == ("y", "x")
        # numeric, not lexical: 2 before 10
        assert t.time_labels == ("2", "10")

    def test_lexical_time_sort_when_not_numeric(self, tmp_path):
        rows = ["a,x,t2,1.0", "a,x,t10,2.0"]
        t = load_dataset(write_csv(tmp_path / "d.csv", rows))
        assert t.time_labels == ("t10", "t2")

    def test_bad_header(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.5"], header="gene,cond,time,value")
        with pytest.raises(DatasetFormatError, match="line 1"):
            load_dataset(p)

    def test_malformed_row_reports_line(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.5", "a,x,2"])
        with pytest.raises(DatasetFormatError, match="line 3"):
            load_dataset(p)

    def test_bad_value_reports_line(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.5", "a,x,2,abc"])
        with pytest.raises(DatasetFormatError, match="line 3.*abc"):
            load_dataset(p)

    def test_duplicate_triple(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.5", "a,x,1,0.6"])
        with pytest.raises(DatasetFormatError, match="duplicate"):
            load_dataset(p)

    def test_ragged_grid_names_gap(self, tmp_path):
        rows = ["a,x,1,0.1", "a,x,2,0.2", "a,y,1,0.3"]
        with pytest.raises(DatasetFormatError, match="'y'.*'2'"):
            load_dataset(write_csv(tmp_path / "d.csv", rows))

    def test_empty_file(self, tmp_path):
        p = tmp_path / "d.csv"
        p.write_text("")
        with pytest.raises(DatasetFormatError):
            load_dataset(p)

    def test_roundtrip_multiset(self, tmp_path, rng):
        tensor = make_tensor(rng.random((4, 3, 5)))
        out = tmp_path / "out.csv"
        export_csv(tensor, out)
        back = load_dataset(out)
        assert back.gene_ids == tensor.gene_ids
        assert back.condition_ids == tensor.condition_ids
        assert back.time_labels == tensor.time_labels
        np.testing.assert_array_equal(back.values, tensor.values)
        assert back.n_missing() == 0

    def test_export_reproduces_row_multiset(self, tmp_path, rng):
        # export(load(f)) carries the same (g,c,t,value) multiset as f,
        # including missing cells, regardless of input row order
        rows = ["a,x,2,0.25", "b,x,1,", "a,x,1,0.5", "b,x,2,1.75"]
        rng.shuffle(rows)
        src = write_csv(tmp_path / "src.csv", rows)
        out = tmp_path / "out.csv"
        export_csv(load_dataset(src), out)

        def multiset(path):
            lines = path.read_text().splitlines()[1:]
            cells = []
            for line in lines:
                g, c, t, v = line.split(",")
                cells.append((g, c, t, float(v) if v else None))
            return sorted(cells, key=repr)

        assert multiset(src) == multiset(out)

    def test_descriptor_checks_axis_sizes(self, tmp_path):
        p = write_csv(tmp_path / "d.csv", ["a,x,1,0.1", "a,x,2,0.2", "b,x,1,0.3", "b,x,2,0.4"])
        t = load_dataset(p, descriptor={"genes": 2, "conditions": 1, "times": 2})
        assert t.shape == (2, 1, 2)
        with pytest.raises(DatasetFormatError, match="descriptor expects 5 genes"):
            load_dataset(p, descriptor={"genes": 5})


class TestTensorInvariants:
    def test_immutability(self, rng):
        t = make_tensor(rng.random((3, 3, 3)))
        with pytest.raises(ValueError):
            t.values[0, 0, 0] = 9.9

    def test_duplicate_labels_rejected(self):
        with pytest.raises(ValueError, match="duplicates"):
            ExpressionTensor(
                np.zeros((2, 1, 1)), ("a", "a"), ("x",), ("1",),
                np.zeros((2, 1, 1), bool),
            )

    def test_shape_mismatch_rejected(self):
        with pytest.raises(ValueError):
            ExpressionTensor(
                np.zeros((2, 1, 1)), ("a",), ("x",), ("1",),
                np.zeros((2, 1, 1), bool),
            )

    def test_limit_genes(self, rng):
        t = make_tensor(rng.random((5, 2, 2)))
        cut = limit_genes(t, 3)
        assert cut.shape == (3, 2, 2)
        assert cut.gene_ids == t.gene_ids[:3]
        np.testing.assert_array_equal(cut.values, t.values[:3])
        assert limit_genes(t, 99) is t
        with pytest.raises(ValueError):
            limit_genes(t, 0)


class TestNormalize:
    def test_endpoints_and_midpoint(self):
        t = make_tensor(np.array([2.0, 6.0, 10.0]).reshape(3, 1, 1))
        out = normalize_minmax(t)
        assert out.values[:, 0, 0].tolist() == [0.0, 0.5, 1.0]

    def test_constant_column_maps_to_zero(self):
        t = make_tensor(np.array([4.0, 4.0]).reshape(2, 1, 1))
        out = normalize_minmax(t)
        assert out.values[:, 0, 0].tolist() == [0.0, 0.0]

    def test_per_column_extremes(self, rng):
        t = make_tensor(rng.normal(5.0, 3.0, size=(10, 3, 4)))
        out = normalize_minmax(t)
        # independent scan: every (condition, time) column hits 0 and 1
        for c in range(3):
            for ti in range(4):
                col = out.values[:, c, ti]
                assert col.min() == pytest.approx(0.0)
                assert col.max() == pytest.approx(1.0)
        assert out.values.min() >= 0.0 and out.values.max() <= 1.0

    def test_missing_cells_untouched_and_excluded(self):
        values = np.array([1.0, 2.0, 100.0]).reshape(3, 1, 1)
        mask = np.array([False, False, True]).reshape(3, 1, 1)
        t = ExpressionTensor(values, ("a", "b", "c"), ("x",), ("1",), mask)
        out = normalize_minmax(t)
        # 100.0 is missing: excluded from the column max, value preserved
        assert out.values[:, 0, 0].tolist() == [0.0, 1.0, 100.0]
        assert out.missing_mask.tolist() == mask.tolist()

    def test_idempotent_on_normalized_data(self, rng):
        t = normalize_minmax(make_tensor(rng.random((8, 3, 3))))
        again = normalize_minmax(t)
        np.testing.assert_allclose(again.values, t.values, atol=1e-12)


class TestImpute:
    def test_identity_without_missing(self, rng):
        t = make_tensor(rng.random((3, 3, 3)))
        assert impute_missing(t, 1) is t

    def test_deterministic(self):
        values = np.zeros((4, 3, 3))
        mask = np.zeros((4, 3, 3), bool)
        mask[0, 0, 0] = mask[1, 2, 1] = mask[3, 0, 2] = True
        t = ExpressionTensor(
            values, tuple("abcd"), tuple("xyz"), ("1", "2", "3"), mask
        )
        a = impute_missing(t, 42)
        b = impute_missing(t, 42)
        np.testing.assert_array_equal(a.values, b.values)
        c = impute_missing(t, 43)
        assert not np.array_equal(a.values, c.values)
        # provenance preserved
        np.testing.assert_array_equal(a.missing_mask, mask)

    def test_fills_unit_interval(self, rng):
        values = np.full((10, 10, 10), -5.0)
        mask = rng.random((10, 10, 10)) < 0.5
        t = ExpressionTensor(
            values,
            tuple(f"g{i}" for i in range(10)),
            tuple(f"c{i}" for i in range(10)),
            tuple(str(i) for i in range(10)),
            mask,
        )
        out = impute_missing(t, 7)
        filled = out.values[mask]
        assert filled.min() >= 0.0 and filled.max() < 1.0
        np.testing.assert_array_equal(out.values[~mask], values[~mask])


class TestSyntheticSpec:
    def test_validation(self):
        coords = TriclusterCoords((0, 1), (0, 1), (0, 1))
        with pytest.raises(ValueError):
            SyntheticSpec(dims=(2, 2), planted=())
        with pytest.raises(ValueError):
            SyntheticSpec(dims=(4, 4, 4), planted=((coords, "sinusoidal"),))
        with pytest.raises(ValueError):
            SyntheticSpec(dims=(4, 4, 4), noise_sigma=-1.0)
        with pytest.raises(ValueError):
            SyntheticSpec(dims=(4, 4, 4), background="poisson")
        big = TriclusterCoords((0, 9), (0, 1), (0, 1))
        with pytest.raises(ValueError, match="fit"):
            SyntheticSpec(dims=(4, 4, 4), planted=((big, "constant"),))

    def test_from_json(self, tmp_path):
        p = tmp_path / "spec.json"
        p.write_text(
            '{"dims": [6, 4, 4], "noise_sigma": 0.0, "seed": 9,'
            ' "planted": [{"genes": [0,1], "conditions": [0,1],'
            ' "times": [0,1], "pattern": "constant"}]}'
        )
        spec = SyntheticSpec.from_json(p)
        assert spec.dims == (6, 4, 4)
        assert spec.planted[0][1] == "constant"


class TestGenerateSynthetic:
    def test_constant_plant_msr_zero(self):
        coords = TriclusterCoords((0, 1), (0, 1), (0, 1))
        spec = SyntheticSpec(dims=(4, 3, 3), planted=((coords, "constant"),), seed=1)
        tensor, truth = generate_synthetic(spec)
        assert truth == [coords]
        assert msr3d(tensor, coords) == pytest.approx(0.0, abs=1e-12)
        region = tensor.values[np.ix_(coords.genes, coords.conditions, coords.times)]
        assert np.ptp(region) == 0.0

    def test_additive_plant_msr_tiny(self):
        coords = TriclusterCoords(tuple(range(20)), (0, 1, 2), tuple(range(5)))
        spec = SyntheticSpec(dims=(100, 6, 10), planted=((coords, "additive"),), seed=2)
        tensor, _ = generate_synthetic(spec)
        assert msr3d(tensor, coords) <= 1e-9

    def test_multiplicative_plant_written(self):
        coords = TriclusterCoords((1, 2, 3), (0, 1), (0, 1, 2))
        spec = SyntheticSpec(
            dims=(6, 4, 4), planted=((coords, "multiplicative"),), seed=3
        )
        tensor, _ = generate_synthetic(spec)
        region = tensor.values[np.ix_(coords.genes, coords.conditions, coords.times)]
        assert region.min() > 0.0

    def test_noisy_plant_beats_random_coords(self):
        plant = TriclusterCoords(tuple(range(20)), (0, 1, 2), tuple(range(5)))
        spec = SyntheticSpec(
            dims=(100, 6, 10), planted=((plant, "additive"),),
            noise_sigma=0.01, seed=4,
        )
        tensor, _ = generate_synthetic(spec)
        planted_msr = msr3d(tensor, plant)
        rng = np.random.default_rng(11)
        wins = 0
        for _ in range(50):
            coords = TriclusterCoords(
                tuple(rng.choice(100, size=20, replace=False)),
                tuple(rng.choice(6, size=3, replace=False)),
                tuple(rng.choice(10, size=5, replace=False)),
            )
            if planted_msr < msr3d(tensor, coords):
                wins += 1
        assert wins >= 48  # >= 95% of draws

    def test_deterministic(self):
        coords = TriclusterCoords((0, 1), (0, 1), (0, 1))
        spec = SyntheticSpec(
            dims=(8, 4, 4), planted=((coords, "additive"),),
            noise_sigma=0.05, seed=123,
        )
        a, _ = generate_synthetic(spec)
        b, _ = generate_synthetic(spec)
        np.testing.assert_array_equal(a.values, b.values)

    def test_gaussian_background(self):
        spec = SyntheticSpec(dims=(50, 4, 4), background="gaussian", seed=5)
        tensor, truth = generate_synthetic(spec)
        assert truth == []
        assert 0.3 < tensor.values.mean() < 0.7

    def test_overlap_rejected(self):
        a = TriclusterCoords((0, 1, 2), (0, 1), (0, 1))
        b = TriclusterCoords((2, 3), (1, 2), (1, 2))
        spec_args = dict(dims=(6, 4, 4), seed=1)
        with pytest.raises(RegionOverlapError):
            generate_synthetic(
                SyntheticSpec(planted=((a, "constant"), (b, "constant")), **spec_args)
            )
        # disjoint on the gene axis alone is enough to be cell-disjoint
        c = TriclusterCoords((3, 4), (0, 1), (0, 1))
        tensor, truth = generate_synthetic(
            SyntheticSpec(planted=((a, "constant"), (c, "constant")), **spec_args)
        )
        assert len(truth) == 2
