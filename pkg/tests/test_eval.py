"""Scoring: self-play/cross-play identities, block averages, team statistics."""

import numpy as np
import pytest

from xplab.core import DecPomdpSpec
from xplab.envs import TWO_CONVENTIONS_PAYOFF, make_cat_dog, make_two_conventions_game
from xplab.evaluate import (
    EXACT,
    BlockAverages,
    CompositeJointPolicy,
    EvalMode,
    PolicyGroup,
    XpMatrix,
    block_average,
    build_report,
    cross_seed_teams,
    monte_carlo,
    sp_score,
    team_assignments,
    xp_matrix,
    xp_score,
)
from xplab.policy import FixedDistributionPolicy

from conftest import random_tabular_policy


def pure(i, k=3):
    probs = np.zeros(k)
    probs[i] = 1.0
    return FixedDistributionPolicy(probs)


def triple_match_game():
    """Three agents, one step: reward 1 when all three actions agree."""

    def reward(state, joint):
        return 1.0 if len(set(joint)) == 1 else 0.0

    return DecPomdpSpec(
        name="triple-match",
        num_agents=3,
        state_labels=("start", "done"),
        terminal=frozenset({1}),
        initial_distribution=np.array([1.0, 0.0]),
        local_actions=lambda agent, aoh: ("x", "y"),
        transition=lambda state, joint: np.array([0.0, 1.0]),
        reward=reward,
        observe=lambda agent, state: "start" if state == 0 else "done",
        horizon=1,
    )


# -- modes ---------------------------------------------------------------------


def test_eval_mode_validation():
    with pytest.raises(ValueError, match="kind"):
        EvalMode("approximate")
    with pytest.raises(ValueError, match="game"):
        monte_carlo(games=0)
    with pytest.raises(ValueError, match="seed"):
        EvalMode("monte-carlo", seed=-1)
    assert EXACT.kind == "exact"


# -- identities -----------------------------------------------------------------


def test_xp_of_a_policy_with_itself_is_self_play():
    for env in (make_two_conventions_game(), make_cat_dog()):
        policy = random_tabular_policy(env, seed=31)
        sp = sp_score(env, policy).value
        xp = xp_score(env, [policy, policy]).value
        assert xp == sp


def test_xp_score_is_seating_averaged():
    env = make_two_conventions_game()
    a, b = pure(0), pure(1)
    # (a1, a2) and (a2, a1) both pay -2; the average must too
    assert xp_score(env, [a, b]).value == -2.0
    # asymmetric seating on an asymmetric payoff still averages both orders
    env2 = make_two_conventions_game()
    assert xp_score(env2, [a, pure(2)]).value == 1.0


def test_xp_score_needs_one_policy_per_seat():
    with pytest.raises(ValueError, match="one policy per agent"):
        xp_score(make_two_conventions_game(), [pure(0)])


def test_monte_carlo_self_play_agrees_with_exact_within_four_stderr():
    env = make_cat_dog()
    policy = random_tabular_policy(env, seed=5)
    exact_value = sp_score(env, policy, EXACT).value
    mc = sp_score(env, policy, monte_carlo(games=10_000, seed=3))
    assert mc.stderr > 0.0
    assert abs(mc.value - exact_value) < 4.0 * mc.stderr


def test_monte_carlo_scores_are_seed_reproducible():
    env = make_cat_dog()
    policy = random_tabular_policy(env, seed=5)
    mode = monte_carlo(games=500, seed=11)
    assert sp_score(env, policy, mode).value == sp_score(env, policy, mode).value


# -- pairwise matrices -------------------------------------------------------------


def test_xp_matrix_of_pure_conventions_reproduces_the_payoff_table():
    env = make_two_conventions_game()
    matrix = xp_matrix(env, [pure(0), pure(1), pure(2)], EXACT)
    np.testing.assert_array_equal(matrix.values, np.asarray(TWO_CONVENTIONS_PAYOFF))
    assert matrix.labels == ("policy0", "policy1", "policy2")


def test_xp_matrix_greedifies_by_default():
    env = make_two_conventions_game()
    soft = FixedDistributionPolicy(np.array([0.6, 0.3, 0.1]))
    matrix = xp_matrix(env, [soft, soft], EXACT)
    assert matrix.values[0, 0] == 2.0  # argmax a1 against itself


def test_xp_matrix_relabeling_equivariance():
    env = make_two_conventions_game()
    policies = [random_tabular_policy(env, seed=s) for s in (1, 2, 3)]
    base = xp_matrix(env, policies, EXACT).values
    perm = [2, 0, 1]
    permuted = xp_matrix(env, [policies[p] for p in perm], EXACT).values
    for j in range(3):
        for k in range(3):
            assert permuted[j, k] == base[perm[j], perm[k]]


def test_xp_matrix_rejects_non_two_agent_games():
    with pytest.raises(ValueError, match="2-agent"):
        xp_matrix(triple_match_game(), [pure(0, 2), pure(0, 2)], EXACT)


def test_xp_matrix_csv(tmp_path):
    matrix = XpMatrix(np.array([[1.0, -2.0], [0.5, 2.0]]), None, ("p0", "p1"), "exact")
    path = matrix.to_csv(tmp_path / "m.csv", comment="meta")
    lines = path.read_text().splitlines()
    assert lines[0] == "# meta"
    assert lines[1] == "seat0\\seat1,p0,p1"
    assert lines[2] == "p0,1.0,-2.0"


# -- block averages ------------------------------------------------------------------


def test_block_average_against_numpy_oracle():
    values = np.arange(64.0).reshape(8, 8)
    blocks = block_average(values, 4)
    assert isinstance(blocks, BlockAverages)
    for g in range(2):
        diag_block = values[g * 4:(g + 1) * 4, g * 4:(g + 1) * 4]
        assert blocks.sp[g] == np.diagonal(diag_block).mean()
        off = diag_block[~np.eye(4, dtype=bool)]
        assert blocks.xp[g, g] == off.mean()
    assert blocks.xp[0, 1] == values[0:4, 4:8].mean()
    assert blocks.xp[1, 0] == values[4:8, 0:4].mean()


def test_block_average_single_policy_groups_have_no_within_xp():
    blocks = block_average(np.array([[1.0, 3.0], [5.0, 7.0]]), 1)
    assert blocks.sp.tolist() == [1.0, 7.0]
    assert np.isnan(blocks.xp[0, 0]) and np.isnan(blocks.xp[1, 1])
    assert blocks.xp[0, 1] == 3.0


def test_block_average_requires_divisible_groups():
    with pytest.raises(ValueError, match="does not divide into groups of 3"):
        block_average(np.zeros((8, 8)), 3)


# -- cross-seed teams -----------------------------------------------------------------


def test_team_assignment_counts():
    # ordered seatings of distinct runs: s!/(s-n)!
    assert len(team_assignments(4, 2)) == 12
    assert len(team_assignments(4, 3)) == 24
    assert len(team_assignments(4, 4)) == 24
    assert len(team_assignments(5, 5)) == 120


def test_team_assignments_never_repeat_a_policy_within_a_team():
    for team in team_assignments(5, 3):
        assert len(set(team)) == 3


def test_cross_seed_teams_on_identical_policies_has_zero_spread():
    env = make_two_conventions_game()
    policies = [pure(0) for _ in range(4)]
    stats = cross_seed_teams(env, policies, EXACT)
    assert stats.count == 12
    assert stats.mean == 2.0
    assert stats.std == 0.0
    assert stats.scores.shape == (12,)


def test_cross_seed_teams_spread_reveals_convention_clash():
    env = make_two_conventions_game()
    stats = cross_seed_teams(env, [pure(0), pure(0), pure(1)], EXACT)
    # ordered pairs: a1-a1 twice at 2, the four mixed pairs at -2
    assert stats.count == 6
    assert stats.mean == pytest.approx((2 * 2.0 + 4 * -2.0) / 6)
    assert stats.std > 1.0


def test_cross_seed_teams_three_agent_game():
    env = triple_match_game()
    agree = [pure(0, 2) for _ in range(4)]
    stats = cross_seed_teams(env, agree, EXACT)
    assert stats.count == 24
    assert stats.mean == 1.0


def test_cross_seed_teams_needs_enough_policies():
    with pytest.raises(ValueError, match="at least"):
        cross_seed_teams(triple_match_game(), [pure(0, 2), pure(1, 2)], EXACT)


# -- composite seating ------------------------------------------------------------------


def test_composite_policy_delegates_each_seat():
    env = make_two_conventions_game()
    composite = CompositeJointPolicy([pure(0), pure(2)])
    assert sp_score(env, composite).value == TWO_CONVENTIONS_PAYOFF[0][2]
    probs0 = composite.action_probs(0, ("start",), ("a1", "a2", "a3"))
    probs1 = composite.action_probs(1, ("start",), ("a1", "a2", "a3"))
    assert probs0[0] == 1.0 and probs1[2] == 1.0


# -- grouped reports -----------------------------------------------------------------


def test_build_report_groups_and_blocks():
    env = make_two_conventions_game()
    groups = [
        PolicyGroup("alpha=0.1", 0.1, [pure(0), pure(1)]),
        PolicyGroup("alpha=1.5", 1.5, [pure(2), pure(2)]),
    ]
    report = build_report(env, groups, EXACT)
    assert report.group_labels == ("alpha=0.1", "alpha=1.5")
    assert report.group_sizes == (2, 2)
    np.testing.assert_array_equal(report.sp_means, [2.0, 1.0])
    # within group 0 the two conventions clash; within group 1 they agree
    assert report.xp_between[0, 0] == -2.0
    assert report.xp_between[1, 1] == 1.0
    assert report.xp_between[0, 1] == 1.0
    assert report.matrix is not None
    assert report.matrix.values.shape == (4, 4)
    assert report.teams[0] is not None and report.teams[0].count == 2


def test_build_report_notes_single_policy_groups():
    env = make_two_conventions_game()
    report = build_report(env, [PolicyGroup("alpha=1", 1.0, [pure(0)])], EXACT)
    assert report.teams == [None]
    assert any("reporting self-play only" in note for note in report.notes)
    assert np.isnan(report.xp_between[0, 0])


def test_build_report_skips_matrix_on_three_agent_games():
    env = triple_match_game()
    group = PolicyGroup("g", None, [pure(0, 2), pure(0, 2), pure(0, 2)])
    report = build_report(env, [group], EXACT)
    assert report.matrix is None
    assert any("pairwise matrix skipped" in note for note in report.notes)
    assert report.teams[0] is not None
    assert report.teams[0].mean == 1.0


def test_build_report_requires_groups():
    with pytest.raises(ValueError, match="at least one"):
        build_report(make_two_conventions_game(), [])
