import json
import math

import pytest

from towsync.engine import SimConfig, StepRecord, run
from towsync.traceio import (
    PHASES_HEADER,
    TRACE_HEADER,
    build_summary,
    json_text,
    phases_csv_text,
    read_trace_csv,
    trace_csv_text,
    write_trace_csv,
)


def short_trace(steps=50, seed=5, **overrides):
    cfg = SimConfig(steps=steps, seed=seed, **overrides)
    records = []
    run(cfg, sinks=(records.extend,))
    return cfg, records


class TestTraceCsv:
    def test_header_exact(self):
        assert TRACE_HEADER == "t,node,phase,channel,collided,success,reward,gated"
        cfg, records = short_trace(steps=2)
        text = trace_csv_text(records)
        assert text.splitlines()[0] == TRACE_HEADER

    def test_round_trip_exact(self, tmp_path):
        cfg, records = short_trace()
        path = tmp_path / "trace.csv"
        write_trace_csv(path, records)
        assert read_trace_csv(path) == records

    def test_empty_trace_header_only(self, tmp_path):
        path = tmp_path / "trace.csv"
        write_trace_csv(path, [])
        assert path.read_text() == TRACE_HEADER + "\n"
        assert read_trace_csv(path) == []

    def test_schema_mismatch_names_column(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,node,phase,chan,collided,success,reward,gated\n")
        with pytest.raises(ValueError, match="'channel'"):
            read_trace_csv(path)

    def test_missing_column_reported(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text("t,node,phase\n")
        with pytest.raises(ValueError, match="column 4"):
            read_trace_csv(path)

    def test_malformed_row_reported(self, tmp_path):
        path = tmp_path / "trace.csv"
        path.write_text(TRACE_HEADER + "\n0,0,0.5\n")
        with pytest.raises(ValueError, match="expected 8 fields"):
            read_trace_csv(path)


class TestPhasesCsv:
    def test_degrees(self):
        record = StepRecord(3, 1, math.pi, 0, False, True, 1.0, False)
        text = phases_csv_text([record])
        lines = text.splitlines()
        assert lines[0] == PHASES_HEADER
        t, node, deg = lines[1].split(",")
        assert (t, node) == ("3", "1")
        assert float(deg) == 180.0


class TestBuildSummary:
    def test_empty_run(self):
        cfg = SimConfig(steps=0)
        summary = build_summary([], cfg)
        assert summary["steps_recorded"] == 0
        assert summary["throughput"] is None
        assert summary["group_report"] is None
        assert summary["lock"] is None

    def test_fields_present(self):
        cfg, records = short_trace(steps=60)
        summary = build_summary(records, cfg)
        assert summary["steps_recorded"] == 60
        assert summary["seed"] == cfg.seed
        assert 0.0 <= summary["throughput"]["mean_success_per_step"] <= 10.0
        assert summary["throughput"]["capacity_bound"] == 12.0
        assert summary["group_report"]["group_count"] >= 1
        groups = summary["group_report"]["groups"]
        assert sorted(i for g in groups for i in g) == list(range(10))
        assert summary["lock"]["window_steps"] == 60
        assert isinstance(summary["conclusions"]["enough_groups"], bool)

    def test_round_trip_through_csv_is_byte_identical(self, tmp_path):
        cfg, records = short_trace(steps=80, seed=9)
        direct = json_text(build_summary(records, cfg))
        path = tmp_path / "trace.csv"
        write_trace_csv(path, records)
        reparsed = json_text(build_summary(read_trace_csv(path), cfg))
        assert direct == reparsed

    def test_single_group_gap_serialized_as_null(self):
        cfg = SimConfig(node_count=2, channel_count=2, channel_probs=(1.0, 1.0),
                        initial_phases=(0.0, 0.1), noise_amplitude=0.0,
                        steps=4, seed=0)
        records = []
        run(cfg, sinks=(records.extend,))
        summary = build_summary(records, cfg)
        if summary["group_report"]["group_count"] == 1:
            assert summary["group_report"]["min_intergroup_gap"] is None

    def test_lock_window_needs_two_steps(self):
        cfg, records = short_trace(steps=1)
        assert build_summary(records, cfg)["lock"] is None

    def test_incomplete_trace_rejected(self):
        cfg, records = short_trace(steps=5)
        with pytest.raises(ValueError, match="multiple"):
            build_summary(records[:-3], cfg)

    def test_json_is_valid_and_deterministic(self):
        cfg, records = short_trace(steps=30)
        text = json_text(build_summary(records, cfg))
        parsed = json.loads(text)
        assert parsed["config"]["node_count"] == 10
        assert json_text(build_summary(records, cfg)) == text
