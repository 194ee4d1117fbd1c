import shutil

import numpy as np
import pytest

import rscorrect as rc
from rscorrect import fileio
from rscorrect.cli import main, parse_scene, parse_size, parse_targets, scene_from_text, scene_text
from conftest import exact_dual_flow


def run(*argv):
    return main(list(argv))


def dir_bytes(path):
    return {p.name: p.read_bytes() for p in sorted(path.iterdir())}


@pytest.fixture(scope="module")
def synth_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("synth")
    code = run(
        "synthesize", "--scene", "translation:vx=6,vy=-3", "--seed", "3",
        "--size", "128x128", "--out", str(out),
    )
    assert code == 0
    return out


class TestParsers:
    def test_parse_size(self):
        assert parse_size("256x128") == (256, 128)
        with pytest.raises(rc.UsageError):
            parse_size("256by128")

    def test_parse_targets(self):
        assert parse_targets("1,0.5,H", 257) == [1, 129, 257]
        assert parse_targets("1.0", 100) == [100]
        assert parse_targets("7", 100) == [7]
        with pytest.raises(rc.UsageError):
            parse_targets("x", 100)

    def test_parse_scene_round_trip(self):
        spec = parse_scene("translation:vx=6,vy=-3", 3, 128, 128, 1, 16.0)
        assert isinstance(spec.motion, rc.Translation)
        text = scene_text(spec)
        assert "vx=6.0" in text and "seed=3" in text
        assert scene_from_text(text) == spec
        rot = parse_scene("rotation:omega=0.03", 1, 64, 64, 3, 20.0)
        assert scene_from_text(scene_text(rot)) == rot
        with pytest.raises(rc.UsageError):
            parse_scene("warp:x=1", 0, 64, 64, 1, 8.0)


class TestSynthesize:
    def test_outputs_present(self, synth_dir):
        names = {p.name for p in synth_dir.iterdir()}
        assert {"I_t2b.png", "I_b2t.png", "manifest.txt"} <= names
        assert sum(1 for n in names if n.startswith("gs_")) == 9

    def test_static_scene_all_identical(self, tmp_path):
        out = tmp_path / "static"
        assert run("synthesize", "--scene", "static", "--size", "64x64", "--out", str(out)) == 0
        frames = sorted(p for p in out.iterdir() if p.suffix == ".png")
        ref = frames[0].read_bytes()
        assert all(p.read_bytes() == ref for p in frames)

    def test_seventeen_targets(self, tmp_path):
        out = tmp_path / "t17"
        code = run(
            "synthesize", "--scene", "translation:vx=2,vy=0", "--size", "64x64",
            "--gs-targets", "17", "--out", str(out),
        )
        assert code == 0
        assert sum(1 for p in out.iterdir() if p.name.startswith("gs_")) == 17

    def test_determinism(self, synth_dir, tmp_path):
        again = tmp_path / "again"
        code = run(
            "synthesize", "--scene", "translation:vx=6,vy=-3", "--seed", "3",
            "--size", "128x128", "--out", str(again),
        )
        assert code == 0
        a = dir_bytes(synth_dir)
        b = dir_bytes(again)
        assert set(a) == set(b)
        for name in a:
            if name != "manifest.txt":
                assert a[name] == b[name], name

    def test_gs_dir_mode(self, tmp_path):
        src = tmp_path / "gs"
        src.mkdir()
        spec = rc.SceneSpec(64, 64, rc.Translation(4.0, 0.0), seed=9, margin=9.0)
        scan = rc.scan_for_scene(spec, rc.Direction.TOP_TO_BOTTOM)
        times = np.sort(rc.row_times(scan))
        for i, t in enumerate(times):
            fileio.write_frame(src / f"f_{i:03d}.png", rc.render_gs_at(spec, float(t)))
        (src / "times.txt").write_text("\n".join(repr(float(t)) for t in times))
        out = tmp_path / "out"
        code = run(
            "synthesize", "--gs-dir", str(src), "--size", "64x64",
            "--tau", repr(scan.tau), "--t-mid", repr(scan.t_mid), "--out", str(out),
        )
        assert code == 0
        got = fileio.read_frame(out / "I_t2b.png")
        exact = rc.render_rs_exact(spec, scan)
        # 8-bit quantization on both paths: at most one level apart
        assert np.abs(got.data - exact.data).max() <= 1.5 / 255.0

    def test_missing_out_is_usage_error(self, capsys):
        assert run("synthesize", "--scene", "static") == 2

    def test_gs_dir_without_times_file(self, tmp_path):
        src = tmp_path / "gs"
        src.mkdir()
        fileio.write_frame(src / "a.png", rc.Frame.from_array(np.zeros((64, 64))))
        assert run("synthesize", "--gs-dir", str(src), "--size", "64x64",
                   "--out", str(tmp_path / "o")) == 2

    def test_gs_dir_count_mismatch(self, tmp_path):
        src = tmp_path / "gs"
        src.mkdir()
        fileio.write_frame(src / "a.png", rc.Frame.from_array(np.zeros((64, 64))))
        (src / "times.txt").write_text("0.0\n1.0\n")
        assert run("synthesize", "--gs-dir", str(src), "--size", "64x64",
                   "--out", str(tmp_path / "o")) == 2

    def test_gs_dir_insufficient_span(self, tmp_path):
        # frames cover only half the scan: a coverage error names the row
        src = tmp_path / "gs"
        src.mkdir()
        rng = np.random.default_rng(0)
        for i, t in enumerate((0.0, 0.4)):
            fileio.write_frame(src / f"f{i}.png", rc.Frame.from_array(rng.random((64, 64))))
        (src / "times.txt").write_text("0.0\n0.4\n")
        code = run("synthesize", "--gs-dir", str(src), "--size", "64x64",
                   "--tau", repr(1.0 / 63.0), "--t-mid", "0.5", "--out", str(tmp_path / "o"))
        assert code == 3


class TestCorrect:
    def test_default_nine_frames(self, synth_dir, tmp_path):
        out = tmp_path / "corr"
        code = run(
            "correct", str(synth_dir / "I_t2b.png"), str(synth_dir / "I_b2t.png"),
            "--out", str(out),
        )
        assert code == 0
        frames = [p.name for p in out.iterdir() if p.name.startswith("gs_")]
        assert sorted(frames) == [f"gs_{i:03d}.png" for i in range(9)]
        assert (out / "coverage.txt").exists()
        assert (out / "manifest.txt").exists()

    def test_seventeen(self, synth_dir, tmp_path):
        out = tmp_path / "corr17"
        code = run(
            "correct", str(synth_dir / "I_t2b.png"), str(synth_dir / "I_b2t.png"),
            "--gs-targets", "17", "--out", str(out),
        )
        assert code == 0
        assert sum(1 for p in out.iterdir() if p.name.startswith("gs_")) == 17

    def test_flow_injection_and_dump(self, synth_dir, tmp_path):
        f_ab, f_ba = exact_dual_flow(128, 128, 6.0, -3.0)
        fileio.write_flo(tmp_path / "ab.flo", f_ab)
        fileio.write_flo(tmp_path / "ba.flo", f_ba)
        out = tmp_path / "corr_inj"
        code = run(
            "correct", str(synth_dir / "I_t2b.png"), str(synth_dir / "I_b2t.png"),
            "--targets", "1,0.5,H",
            "--flow-in", f"{tmp_path/'ab.flo'},{tmp_path/'ba.flo'}",
            "--dump-flow", "--out", str(out),
        )
        assert code == 0
        assert (out / "flow_t2b_to_b2t.flo").exists()
        back = fileio.read_flo(out / "flow_t2b_to_b2t.flo")
        assert np.allclose(back.u, f_ab.u, atol=1e-4)

    def test_size_mismatch_is_data_error(self, synth_dir, tmp_path):
        small = tmp_path / "small.png"
        fileio.write_frame(small, rc.Frame.from_array(np.zeros((32, 32))))
        out = tmp_path / "bad"
        code = run("correct", str(synth_dir / "I_t2b.png"), str(small), "--out", str(out))
        assert code == 3

    def test_missing_file_is_data_error(self, tmp_path):
        code = run("correct", str(tmp_path / "no.png"), str(tmp_path / "no2.png"), "--out", str(tmp_path / "o"))
        assert code == 3


class TestReconstructRs:
    def test_two_frame_mode(self, synth_dir, tmp_path):
        out = tmp_path / "rec"
        code = run(
            "reconstruct-rs", str(synth_dir / "gs_000.png"), str(synth_dir / "gs_008.png"),
            "--out", str(out),
        )
        assert code == 0
        assert (out / "recon_t2b.png").exists() and (out / "recon_b2t.png").exists()

    def test_identical_inputs_reproduce_input(self, tmp_path):
        frame = rc.Frame.from_array(np.random.default_rng(0).random((64, 64)))
        src = tmp_path / "f.png"
        fileio.write_frame(src, frame)
        out = tmp_path / "rec"
        assert run("reconstruct-rs", str(src), str(src), "--out", str(out)) == 0
        got = fileio.read_frame(out / "recon_t2b.png")
        ref = fileio.read_frame(src)
        assert rc.psnr(got, ref) >= 50.0

    def test_three_frames_require_mid_row(self, synth_dir, tmp_path):
        out = tmp_path / "rec3"
        args = [
            "reconstruct-rs", str(synth_dir / "gs_000.png"), str(synth_dir / "gs_004.png"),
            str(synth_dir / "gs_008.png"), "--out", str(out),
        ]
        assert run(*args) == 2
        assert run(*args, "--mid-row", "64") == 0

    def test_wrong_arity(self, synth_dir, tmp_path):
        assert run("reconstruct-rs", str(synth_dir / "gs_000.png"), "--out", str(tmp_path / "x")) == 2

    def test_matches_synthesized_rs(self, synth_dir, tmp_path):
        out = tmp_path / "rec_oracle"
        code = run(
            "reconstruct-rs", str(synth_dir / "gs_000.png"), str(synth_dir / "gs_008.png"),
            "--out", str(out),
        )
        assert code == 0
        got = fileio.read_frame(out / "recon_t2b.png")
        ref = fileio.read_frame(synth_dir / "I_t2b.png")
        assert rc.psnr(got, ref, border=16) >= 35.0


class TestCycleCheck:
    def test_static_pair_small_loss(self, tmp_path, capsys):
        frame = rc.Frame.from_array(np.random.default_rng(1).random((64, 64)))
        src = tmp_path / "f.png"
        fileio.write_frame(src, frame)
        assert run("cycle-check", str(src), str(src)) == 0
        text = capsys.readouterr().out
        fields = dict(
            line.split(": ", 1) for line in text.splitlines() if ": " in line
        )
        assert float(fields["l_self"]) < 1e-3
        # printed values are rounded to 8 decimals; additivity is exact in memory
        assert float(fields["l_self"]) == pytest.approx(
            float(fields["l_se"]) + float(fields["l_sme"]), abs=2e-8
        )
        assert "psnr[full_t2b]" in fields and "ssim[mid_b2t]" in fields

    def test_writes_outputs(self, synth_dir, tmp_path, capsys):
        out = tmp_path / "cycle"
        code = run(
            "cycle-check", str(synth_dir / "I_t2b.png"), str(synth_dir / "I_b2t.png"),
            "--exclude-border", "16", "--out", str(out),
        )
        assert code == 0
        names = {p.name for p in out.iterdir()}
        assert {"gs_start.png", "gs_mid.png", "gs_end.png", "cycle_report.txt", "manifest.txt"} <= names


class TestEvaluate:
    def test_directory_vs_itself(self, synth_dir, capsys):
        assert run("evaluate", str(synth_dir), str(synth_dir)) == 0
        out = capsys.readouterr().out
        assert "mean: psnr=99.0000 ssim=1.000000" in out
        assert "frames=11" in out

    def test_border_flag(self, synth_dir, capsys):
        assert run("evaluate", str(synth_dir), str(synth_dir), "--exclude-border", "16") == 0

    def test_unmatched_names(self, synth_dir, tmp_path, capsys):
        partial = tmp_path / "partial"
        partial.mkdir()
        shutil.copy(synth_dir / "gs_000.png", partial / "gs_000.png")
        shutil.copy(synth_dir / "gs_001.png", partial / "renamed.png")
        assert run("evaluate", str(synth_dir), str(partial)) == 3
        err = capsys.readouterr().err
        assert "unmatched" in err and "renamed.png" in err

    def test_threads_env(self, synth_dir, monkeypatch, capsys):
        monkeypatch.setenv("RSCORRECT_THREADS", "2")
        assert run("evaluate", str(synth_dir), str(synth_dir)) == 0
        monkeypatch.setenv("RSCORRECT_THREADS", "zebra")
        assert run("evaluate", str(synth_dir), str(synth_dir)) == 2

    def test_synthesize_correct_evaluate_compose(self, synth_dir, tmp_path, capsys):
        f_ab, f_ba = exact_dual_flow(128, 128, 6.0, -3.0)
        fileio.write_flo(tmp_path / "ab.flo", f_ab)
        fileio.write_flo(tmp_path / "ba.flo", f_ba)
        out = tmp_path / "corr"
        assert run(
            "correct", str(synth_dir / "I_t2b.png"), str(synth_dir / "I_b2t.png"),
            "--flow-in", f"{tmp_path/'ab.flo'},{tmp_path/'ba.flo'}", "--out", str(out),
        ) == 0
        # evaluate pairs the corrected frames against synthesize's ground truth
        gt = tmp_path / "gt"
        gt.mkdir()
        for i in range(9):
            shutil.copy(synth_dir / f"gs_{i:03d}.png", gt / f"gs_{i:03d}.png")
        assert run("evaluate", str(gt), str(out), "--exclude-border", "16") == 0
        mean_line = [l for l in capsys.readouterr().out.splitlines() if l.startswith("mean:")][-1]
        mean_psnr = float(mean_line.split("psnr=")[1].split()[0])
        assert mean_psnr >= 45.0
