import math

import pytest

import blocks_sim as bs


def test_consistency_example():
    others = [(0.6, 1.0), (1.0, 0.5)]
    assert bs.consistency(0.8, others, 1.0) == pytest.approx(0.375)


def test_confidence_and_ema():
    assert bs.confidence([0.2, 0.8]) == pytest.approx(0.3)
    assert bs.update_validator_reputation(0.5, [0.0], alpha=0.2) == pytest.approx(0.6)


def test_impact_resale_priority():
    assert bs.impact_reward(0.8, 10, 7, beta=0.5) == pytest.approx(6.8)
    shares = bs.distribute_resale(10.0, {"a": 0.3, "b": 0.2, "c": 0.5})
    assert shares == pytest.approx({"a": 3.0, "b": 2.0, "c": 5.0})
    assert bs.priority_of(5, 1.0, 1.0, 0.5, 0.1) == pytest.approx(5 ** 0.4)


def test_errors_carry_codes():
    with pytest.raises(bs.BlocksError) as e:
        bs.distribute_resale(1.0, {"a": 0.0})
    assert bs.error_code(e.value) == "AllZeroReputation"
    with pytest.raises(bs.BlocksError) as e:
        bs.validate({"cache": {"capcity": 3}})
    assert bs.error_code(e.value) == "ConfigError"
    assert "cache.capcity" in str(e.value)


def test_ledger_dedup():
    led = bs.Ledger()
    key = led.put_prompt("Paris is the capital of France", "s1")
    assert led.put_prompt("Paris is the capital of France", "s2") == key
    assert key[0] == bs.sha256_hex("Paris is the capital of France")
    assert led.prompt_count() == 1
    assert led.prompt_reputation("Paris is the capital of France") == 0.5
    assert led.prompt_reputation("absent") is None


def test_run_and_dedup():
    summary = bs.run({"rounds": 20, "topics": 8, "seed": 3})
    assert summary == bs.run({"rounds": 20, "topics": 8, "seed": 3})
    assert 0.0 <= summary["hit_rate"] <= 1.0
    questions, prompts, reduction = bs.dedup(
        {"topics": 53, "questions": 253, "rounds": 64, "queries_per_round": 4,
         "n_malicious_suppliers": 0, "n_malicious_validators": 0, "attack": "Honest"})
    assert (questions, prompts) == (253, 53)
    assert math.isclose(reduction, 1 - 53 / 253)
    csv = bs.run_csv({"rounds": 5, "topics": 4})
    assert csv["reputation"].startswith("round,")


def test_presets():
    assert bs.preset_names() == ["fig4", "fig5", "fig6", "fig7"]
    assert "questions = 253" in bs.preset_text("fig7")
    assert bs.preset_text("fig9") is None
