import dataclasses

import pytest as _pytest

import mbm_relay.cli as cli
from mbm_relay import geometry
from mbm_relay.cli import SepCurve, SepPoint
from mbm_relay.errors import DomainError

DISTANCES = (400.0, 1200.0, 2000.0)


def _analytic(spec, outputs=("closed_form",), sweep_values=DISTANCES):
    simulation = dataclasses.replace(spec.simulation, mgf_samples=10_000)
    return dataclasses.replace(
        spec,
        outputs=outputs,
        sweep_values=sweep_values,
        simulation=simulation,
    )


@_pytest.fixture
def qpsk_spec(data_dir):
    return cli.load_spec(data_dir / "qpsk_snr.ini")


@_pytest.fixture
def curve():
    return SepCurve(
        name="demo",
        axis="snr_dB",
        units="dB",
        outputs=("closed_form", "simulation"),
        points=[
            SepPoint(
                x=0.0,
                sep_closed=0.1,
                sep_sim=0.11,
                sim_stderr=0.01,
                trials=10_000,
            ),
            SepPoint(
                x=5.0,
                sep_closed=1 / 3,
                sep_sim=0.3,
                sim_stderr=0.004,
                trials=20_000,
            ),
            SepPoint(x=10.0, sep_closed=1e-17),
        ],
    )


class TestLinkSnrs:
    def test_snr_axis(self, qpsk_spec):
        omega1, omega2 = cli.link_snrs(qpsk_spec, 20.0)

        assert omega1 == omega2 == _pytest.approx(100.0)

    def test_distance_axis_is_symmetric(self):
        spec = cli.load_spec(cli.PRESET_DIR / "fig4_urban.ini")

        omega1, omega2 = cli.link_snrs(spec, 1000.0)

        assert omega1 == omega2
        budget = geometry.LinkBudget(
            tx_power_dbm=23.0,
            noise_power_dbm=-104.0,
            path_loss_linear=geometry.path_loss_linear(
                geometry.environment("Urban"),
                geometry.LinkGeometry(
                    uav_height_m=100.0, ground_distance_m=500.0
                ),
            ),
        )
        assert omega1 == _pytest.approx(geometry.link_snr_linear(budget))

    def test_snr_falls_with_distance(self):
        spec = cli.load_spec(cli.PRESET_DIR / "fig4_urban.ini")

        snrs = [cli.link_snrs(spec, d)[0] for d in (200.0, 1000.0, 2000.0)]

        assert snrs == sorted(snrs, reverse=True)
        assert 0.0 < geometry.linear_to_db(snrs[-1])
        assert geometry.linear_to_db(snrs[0]) < 50.0


class TestCsv:
    def test_header_and_rows(self, curve, tmp_path):
        out = cli.emit_csv(curve, tmp_path / "nested" / "demo.csv")

        lines = out.read_text().split("\n")
        assert lines[0] == ",".join(cli.COLUMNS)
        assert len([line for line in lines if line]) == 4
        assert lines[3] == "10.0,1e-17,,,,,"

    def test_floats_read_back_exactly(self, curve, tmp_path):
        rows = cli.read_csv(cli.emit_csv(curve, tmp_path / "demo.csv"))

        assert rows[1]["sep_closed"] == 1 / 3
        assert rows[1]["trials"] == 20_000
        assert rows[2]["sep_sim"] is None

    def test_completeness(self, curve):
        assert curve.points[0].is_complete(curve.outputs)
        assert not curve.points[2].is_complete(curve.outputs)
        assert not curve.complete


class TestEvaluatePoint:
    def test_requested_outputs_only(self, qpsk_spec):
        point = cli.evaluate_point(qpsk_spec, 20.0)

        assert point.errors == []
        assert point.sep_closed is not None
        assert point.sep_asymp >= point.sep_closed
        assert point.sep_bound is None
        assert point.sep_sim is None

    def test_failure_is_recorded(self, mocker, qpsk_spec):
        mocker.patch.object(cli, "log")
        mocker.patch.object(
            cli.analysis, "hop1_sep_closed", side_effect=DomainError("boom")
        )

        point = cli.evaluate_point(qpsk_spec, 20.0)

        assert point.sep_closed is None
        assert point.sep_asymp is None
        assert [error["output"] for error in point.errors] == ["closed_form"]
        assert point.errors[0]["title"] == "DomainError"
        assert not point.is_complete(qpsk_spec.outputs)

    def test_failures_reach_the_summary(self, mocker, qpsk_spec, tmp_path):
        mocker.patch.object(cli, "log")
        mocker.patch.object(
            cli.analysis,
            "hop2_sep_asymptotic",
            side_effect=DomainError("boom"),
        )

        summary = cli._run_one(qpsk_spec, tmp_path / "out.csv")

        failed = [failure["x"] for failure in summary["failures"]]
        assert failed == [10.0, 20.0]
        rows = cli.read_csv(tmp_path / "out.csv")
        assert all(row["sep_closed"] is not None for row in rows)
        assert all(row["sep_asymp"] is None for row in rows)

    def test_bound_columns_dominate_closed_form(self):
        spec = _analytic(
            cli.load_spec(cli.PRESET_DIR / "fig4_urban.ini"),
            outputs=("closed_form", "union_bound", "asymptotic"),
        )

        curve = cli.run_experiment(spec)

        assert curve.complete
        for point in curve.points:
            assert point.sep_bound >= point.sep_closed
            assert point.sep_asymp >= point.sep_closed


class TestFigureOrdering:
    def test_fig3_milder_channel_is_better(self):
        def closed(stem):
            spec = _analytic(cli.load_spec(cli.PRESET_DIR / f"{stem}.ini"))
            return [p.sep_closed for p in cli.run_experiment(spec).points]

        mild = closed("fig3_sigma4_k10")
        harsh = closed("fig3_sigma8_k5")

        assert all(a < b for a, b in zip(mild, harsh))
        assert mild == sorted(mild)
        assert harsh == sorted(harsh)

    def test_fig4_environment_ordering(self):
        curves = [
            cli.run_experiment(
                _analytic(cli.load_spec(cli.PRESET_DIR / f"fig4_{name}.ini"))
            )
            for name in ("suburban", "urban", "denseurban", "highriseurban")
        ]

        for index in range(len(DISTANCES)):
            column = [curve.points[index].sep_closed for curve in curves]
            assert column == sorted(column)

    def test_fig2_16qam_crosses_bpsk(self):
        curves = {}
        for path in cli.preset_files("fig2"):
            spec = _analytic(
                cli.load_spec(path),
                outputs=("closed_form", "asymptotic"),
                sweep_values=(0.0, 50.0),
            )
            curves[spec.modulation_order] = cli.run_experiment(spec).points

        low = [curves[order][0].sep_closed for order in (2, 4, 16)]
        assert low == sorted(low)
        assert curves[16][1].sep_asymp < curves[2][1].sep_asymp


class TestDeterminism:
    def test_same_bytes_for_any_worker_count(
        self, qpsk_spec, tmp_path, mocker
    ):
        mocker.patch.object(cli, "log")
        spec = dataclasses.replace(
            qpsk_spec, outputs=("closed_form", "simulation")
        )
        paths = []
        for workers in (1, 2):
            run_spec = cli.with_overrides(spec, workers=workers)
            paths.append(
                cli.emit_csv(
                    cli.run_experiment(run_spec), tmp_path / f"w{workers}.csv"
                )
            )

        assert paths[0].read_bytes() == paths[1].read_bytes()

    @_pytest.mark.slow
    def test_fig2_preset_bytes_for_any_worker_count(self, tmp_path, mocker):
        mocker.patch.object(cli, "log")
        for workers in (1, 2):
            result = cli._preset(
                {
                    "name": "fig2",
                    "out": str(tmp_path / f"w{workers}"),
                    "workers": workers,
                    "max_trials": 100_000,
                }
            )
            assert result.error == {}

        for stem in ("fig2_bpsk", "fig2_qpsk", "fig2_16qam"):
            first = (tmp_path / "w1" / f"{stem}.csv").read_bytes()
            second = (tmp_path / "w2" / f"{stem}.csv").read_bytes()
            assert first == second

    def test_run_command_writes_csv(self, data_dir, tmp_path, mocker):
        mocker.patch.object(cli, "log")
        out = tmp_path / "qpsk.csv"

        code = cli.main(
            ["run", str(data_dir / "qpsk_snr.ini"), "--out", str(out)]
        )

        assert code == 0
        assert len(cli.read_csv(out)) == 2
