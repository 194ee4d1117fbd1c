import numpy as np
import pytest

import rscorrect as rc
from conftest import exact_dual_flow, interior_psnr, make_scene, render_dual_pair

T2B = rc.Direction.TOP_TO_BOTTOM
B2T = rc.Direction.BOTTOM_TO_TOP


class TestTimeDisplacement:
    def test_hand_vectors_h5_m3(self):
        d1 = rc.time_displacement(5, 3, T2B)
        d2 = rc.time_displacement(5, 3, B2T)
        assert np.allclose(d1.values, [-0.5, -0.25, 0.0, 0.25, 0.5], atol=1e-12)
        assert np.allclose(d2.values, [0.5, 0.25, 0.0, -0.25, -0.5], atol=1e-12)

    def test_zero_at_capture_rows(self):
        for h in (2, 5, 8, 256):
            for m in (1, 2, h - 1, h):
                assert rc.time_displacement(h, m, T2B).values[m - 1] == 0.0
                assert rc.time_displacement(h, m, B2T).values[h - m] == 0.0

    def test_flip_identity(self):
        # reversing the scan visits image row H+1-i at the time of row i
        for h in (2, 5, 8, 256):
            for m in (1, 3 if h > 2 else 1, h):
                d1 = rc.time_displacement(h, m, T2B).values
                d2 = rc.time_displacement(h, m, B2T).values
                assert np.array_equal(d2, d1[::-1])

    def test_center_row_agreement_odd_h(self):
        for h in (5, 9, 255):
            c = (h + 1) // 2
            for m in (1, c, h):
                d1 = rc.time_displacement(h, m, T2B).values[c - 1]
                d2 = rc.time_displacement(h, m, B2T).values[c - 1]
                assert d1 == d2

    def test_monotonicity(self):
        d1 = rc.time_displacement(8, 4, T2B).values
        d2 = rc.time_displacement(8, 4, B2T).values
        assert np.all(np.diff(d1) > 0)
        assert np.all(np.diff(d2) < 0)

    def test_range_error(self):
        with pytest.raises(rc.RangeError):
            rc.time_displacement(5, 0, T2B)
        with pytest.raises(rc.RangeError):
            rc.time_displacement(5, 6, B2T)

    def test_randomized_identity_sweep(self):
        rng = np.random.default_rng(12)
        for _ in range(50):
            h = int(rng.integers(2, 400))
            m = int(rng.integers(1, h + 1))
            d1 = rc.time_displacement(h, m, T2B).values
            d2 = rc.time_displacement(h, m, B2T).values
            assert d1[m - 1] == 0.0 and d2[h - m] == 0.0
            assert np.array_equal(d2, d1[::-1])
            assert np.abs(d1).max() <= 1.0 and np.abs(d2).max() <= 1.0
            assert np.all(np.diff(d1) > 0) and np.all(np.diff(d2) < 0)
            # per-row sums are constant: both maps measure to the same target
            assert np.allclose(d1 + d2, (h + 1.0 - 2.0 * m) / (h - 1.0), atol=1e-12)


class TestEstimateMotionMap:
    def test_static_pair_zero_motion(self):
        spec = make_scene(40, 0.0, 0.0, size=64)
        frame = rc.render_gs_at(spec, 0.5)
        o1, o2 = rc.estimate_motion_map(frame, frame)
        assert np.median(np.hypot(o1.u, o1.v)) < 0.5
        assert np.median(np.hypot(o2.u, o2.v)) < 0.5

    def test_constant_velocity_recovered(self):
        vx = 8.0
        spec = make_scene(41, vx, 0.0, size=128)
        i_t2b, i_b2t, _ = render_dual_pair(spec)
        o1, o2 = rc.estimate_motion_map(i_t2b, i_b2t)
        inner = np.s_[16:-16, 16:-16]
        for o in (o1, o2):
            assert abs(np.median(o.u[inner]) - vx) <= 0.1 * vx
            assert abs(np.median(o.v[inner])) <= 0.5

    def test_exact_flow_gives_exact_velocity(self):
        vx, vy = 6.0, -4.0
        h = w = 64
        pair = exact_dual_flow(h, w, vx, vy)
        spec = make_scene(42, vx, vy, size=64)
        i_t2b, i_b2t, _ = render_dual_pair(spec)
        params = rc.CorrectionParams(use_external_flow=pair)
        o1, o2 = rc.estimate_motion_map(i_t2b, i_b2t, params)
        ok1 = ~o1.low_confidence
        assert np.allclose(o1.u[ok1], vx, atol=1e-9)
        assert np.allclose(o1.v[ok1], vy, atol=1e-9)
        ok2 = ~o2.low_confidence
        assert np.allclose(o2.u[ok2], vx, atol=1e-9)

    def test_crossing_row_flagged_low_confidence(self):
        # odd height: the exact crossing row has a zero time gap
        h = w = 65
        pair = exact_dual_flow(h, w, 4.0, 0.0)
        spec = make_scene(43, 4.0, 0.0, size=65)
        i_t2b, i_b2t, _ = render_dual_pair(spec)
        params = rc.CorrectionParams(use_external_flow=pair)
        o1, _ = rc.estimate_motion_map(i_t2b, i_b2t, params)
        c = (h + 1) // 2
        assert o1.low_confidence[c - 1].all()
        assert not o1.low_confidence[:c - 1].any()
        assert np.all(np.isfinite(o1.u))


class TestWarpRsToGs:
    def test_zero_motion_identity(self):
        spec = make_scene(44, 0.0, 0.0, size=64)
        frame = rc.render_gs_at(spec, 0.5)
        motion = rc.MotionMap(
            np.zeros((64, 64)), np.zeros((64, 64)),
            np.ones((64, 64), dtype=bool), np.zeros((64, 64), dtype=bool),
        )
        d = rc.time_displacement(64, 1, T2B)
        out, valid = rc.warp_rs_to_gs(frame, motion, d, iters=3)
        assert np.array_equal(out.data, frame.data)
        assert valid.all()

    def test_horizontal_motion_single_iteration_suffices(self):
        vx = 8.0
        spec = make_scene(45, vx, 0.0, size=128)
        i_t2b, _, scan = render_dual_pair(spec)
        motion = rc.MotionMap(
            np.full((128, 128), vx), np.zeros((128, 128)),
            np.ones((128, 128), dtype=bool), np.zeros((128, 128), dtype=bool),
        )
        d = rc.time_displacement(128, 1, T2B)
        one, _ = rc.warp_rs_to_gs(i_t2b, motion, d, iters=1)
        many, _ = rc.warp_rs_to_gs(i_t2b, motion, d, iters=5)
        assert np.allclose(one.data, many.data, atol=1e-12)

    def test_exact_motion_matches_gs_render(self):
        vx, vy = 7.0, 4.0
        spec = make_scene(46, vx, vy, size=128)
        i_t2b, _, scan = render_dual_pair(spec)
        motion = rc.MotionMap(
            np.full((128, 128), vx), np.full((128, 128), vy),
            np.ones((128, 128), dtype=bool), np.zeros((128, 128), dtype=bool),
        )
        d = rc.time_displacement(128, 1, T2B)
        out, _ = rc.warp_rs_to_gs(i_t2b, motion, d, iters=3)
        ref = rc.render_gs_at(spec, rc.row_time(scan, 1))
        assert interior_psnr(out, ref) >= 45.0

    def test_vertical_motion_iterations_improve(self):
        vy = 8.0
        spec = make_scene(47, 0.0, vy, size=128)
        i_t2b, _, scan = render_dual_pair(spec)
        motion = rc.MotionMap(
            np.zeros((128, 128)), np.full((128, 128), vy),
            np.ones((128, 128), dtype=bool), np.zeros((128, 128), dtype=bool),
        )
        d = rc.time_displacement(128, 1, T2B)
        ref = rc.render_gs_at(spec, rc.row_time(scan, 1)).data[16:-16, 16:-16]
        errs = []
        for iters in range(4):
            out, _ = rc.warp_rs_to_gs(i_t2b, motion, d, iters=iters)
            errs.append(float(np.sqrt(np.mean((out.data[16:-16, 16:-16] - ref) ** 2))))
        # decreasing until the fixed point converges (then a ~1e-7 float plateau)
        for k in range(3):
            assert errs[k + 1] <= errs[k] + 1e-6
        assert errs[3] < errs[0]


class TestFusionMask:
    def test_trusts_own_capture_row(self):
        d1 = rc.time_displacement(5, 1, T2B)
        d2 = rc.time_displacement(5, 1, B2T)
        mask = rc.fusion_mask(d1, d2)
        assert np.allclose(mask.m[:, 0], [1.0, 0.75, 0.5, 0.25, 0.0], atol=1e-5)

    def test_equal_distance_half(self):
        d1 = rc.time_displacement(9, 5, T2B)
        d2 = rc.time_displacement(9, 5, B2T)
        mask = rc.fusion_mask(d1, d2)
        assert np.allclose(mask.m[:, 0], 0.5, atol=1e-12)

    def test_width_broadcast(self):
        d1 = rc.time_displacement(4, 2, T2B)
        d2 = rc.time_displacement(4, 2, B2T)
        mask = rc.fusion_mask(d1, d2, width=7)
        assert mask.m.shape == (4, 7)


class TestCorrectToTime:
    def test_static_pair_identity(self):
        spec = make_scene(48, 0.0, 0.0, size=64)
        frame = rc.render_gs_at(spec, 0.5)
        scan = rc.scan_for_scene(spec, T2B)
        for m in (1, 17, 33, 64):
            out = rc.correct_to_time(frame, frame, scan, m)
            assert rc.psnr(out, frame) >= 50.0

    def test_oracle_flow_all_targets(self):
        vx, vy = 9.0, -5.0
        spec = make_scene(49, vx, vy, size=128)
        i_t2b, i_b2t, scan = render_dual_pair(spec)
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(128, 128, vx, vy))
        for m in (1, 64, 128):
            out = rc.correct_to_time(i_t2b, i_b2t, scan, m, params)
            ref = rc.render_gs_at(spec, rc.row_time(scan, m))
            assert interior_psnr(out, ref) >= 45.0

    def test_estimated_flow(self):
        vx, vy = 7.0, 3.0
        spec = make_scene(50, vx, vy, size=128)
        i_t2b, i_b2t, scan = render_dual_pair(spec)
        results = rc.correct_video_detailed(i_t2b, i_b2t, scan, [1, 64, 128])
        for res in results:
            ref = rc.render_gs_at(spec, rc.row_time(scan, res.target_row))
            assert interior_psnr(res.frame, ref) >= 30.0

    def test_target_out_of_range(self):
        spec = make_scene(51, 0.0, 0.0, size=64)
        frame = rc.render_gs_at(spec, 0.5)
        scan = rc.scan_for_scene(spec, T2B)
        with pytest.raises(rc.RangeError):
            rc.correct_to_time(frame, frame, scan, 0)

    def test_rgb_pipeline(self):
        vx, vy = 5.0, -2.0
        spec = make_scene(52, vx, vy, size=64, channels=3)
        i_t2b, i_b2t, scan = render_dual_pair(spec)
        assert i_t2b.channels == 3
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(64, 64, vx, vy))
        out = rc.correct_to_time(i_t2b, i_b2t, scan, 1, params)
        ref = rc.render_gs_at(spec, rc.row_time(scan, 1))
        assert out.channels == 3
        assert interior_psnr(out, ref, border=12) >= 45.0


class TestCorrectVideo:
    def test_single_target_matches_correct_to_time(self, small_pair):
        spec, i_t2b, i_b2t, scan = small_pair
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(128, 128, 6.0, -3.0))
        video = rc.correct_video(i_t2b, i_b2t, scan, [40], params)
        single = rc.correct_to_time(i_t2b, i_b2t, scan, 40, params)
        assert len(video) == 1
        assert np.array_equal(video[0].data, single.data)

    def test_default_grid_is_nine(self, small_pair):
        spec, i_t2b, i_b2t, scan = small_pair
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(128, 128, 6.0, -3.0))
        video = rc.correct_video(i_t2b, i_b2t, scan, None, params)
        assert len(video) == 9

    def test_seventeen_targets(self, small_pair):
        spec, i_t2b, i_b2t, scan = small_pair
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(128, 128, 6.0, -3.0))
        video = rc.correct_video(i_t2b, i_b2t, scan, rc.target_row_grid(128, 17), params)
        assert len(video) == 17

    def test_workers_match_serial(self, small_pair):
        spec, i_t2b, i_b2t, scan = small_pair
        params = rc.CorrectionParams(use_external_flow=exact_dual_flow(128, 128, 6.0, -3.0))
        serial = rc.correct_video_detailed(i_t2b, i_b2t, scan, [1, 64, 128], params, workers=1)
        threaded = rc.correct_video_detailed(i_t2b, i_b2t, scan, [1, 64, 128], params, workers=3)
        for a, b in zip(serial, threaded):
            assert np.array_equal(a.frame.data, b.frame.data)


class TestTargetRowGrid:
    def test_exact_when_divisible(self):
        assert rc.target_row_grid(257, 9) == [1, 33, 65, 97, 129, 161, 193, 225, 257]

    def test_rounded_otherwise(self):
        rows = rc.target_row_grid(256, 9)
        assert len(rows) == 9
        assert rows[0] == 1 and rows[-1] == 256
        assert rows == sorted(rows)

    def test_seventeen(self):
        rows = rc.target_row_grid(257, 17)
        assert len(rows) == 17
        assert rows == list(range(1, 258, 16))
