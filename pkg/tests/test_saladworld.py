from collections import deque

import pytest

from saladrl.engine import WorldError, initial_state, run_commands, step
from saladrl.saladworld import (CATALOG, check_level, level_text, load_level, parse, serialize, walkthrough,
                                walkthrough_scores, walkthrough_text)

# published per-level counts of the benchmark
TABLE1 = {
    1: (4, 2, 2, 8),
    2: (7, 4, 3, 15),
    3: (7, 4, 3, 15),
    4: (9, 8, 4, 50),
    5: (11, 15, 5, 141),
    6: (12, 20, 6, 283),
    7: (12, 20, 7, 295),
}
# possible scores per level, from the published score rows
SCORE_ROWS = {
    1: [10, 15],
    2: [5, 10, 15, 20],
    3: [5, 10, 15, 20],
    4: [5, 10, 15, 20, 25],
    5: [5, 10, 15, 20, 25, 30],
    6: [5, 10, 15, 20, 25, 30, 35],
    7: [5, 10, 15, 20, 25, 30, 35, 40],
}


@pytest.mark.parametrize("n", range(1, 8))
def test_counts_match_table(n):
    w = load_level(n)
    assert (len(w.rooms), len(w.objects), len(w.subtasks), len(w.action_set)) == TABLE1[n]


@pytest.mark.parametrize("n", range(1, 8))
def test_walkthrough_reaches_max_score(n):
    w = load_level(n)
    trs = run_commands(w, walkthrough(n))
    assert trs[-1].done
    assert trs[-1].next_state.score == SCORE_ROWS[n][-1] == w.max_score
    assert all(t.admissible for t in trs)
    assert not any(t.done for t in trs[:-1])


@pytest.mark.parametrize("n", range(1, 8))
def test_walkthrough_scores_lie_in_score_row(n):
    seen = walkthrough_scores(n)
    assert set(seen) <= set(SCORE_ROWS[n])
    assert seen[-1] == SCORE_ROWS[n][-1]


def test_level1_market_prefix_scores_ten():
    w = load_level(1)
    trs = run_commands(w, walkthrough(1)[:2])
    assert trs[-1].next_state.score == 10


def _achievable_scores(world):
    s0 = initial_state(world)
    seen = {s0}
    todo = deque([s0])
    scores = set()
    while todo:
        s = todo.popleft()
        for a in range(len(world.action_set)):
            tr = step(world, s, a)
            if tr.reward:
                scores.add(tr.next_state.score)
            if tr.next_state not in seen:
                seen.add(tr.next_state)
                if not tr.done:
                    todo.append(tr.next_state)
    return sorted(scores)


@pytest.mark.parametrize("n", [1, 2, 3])
def test_score_row_is_set_of_achievable_scores(n):
    # exhaustive over every reachable state, so only the small levels
    assert _achievable_scores(load_level(n)) == SCORE_ROWS[n]


@pytest.mark.parametrize("n", range(1, 8))
def test_serialize_round_trip(n):
    w = load_level(n)
    again = parse(serialize(w))
    assert again == w
    assert again.action_set == w.action_set


@pytest.mark.parametrize("n", [0, 8, -1])
def test_level_out_of_range(n):
    with pytest.raises(ValueError):
        load_level(n)
    with pytest.raises(ValueError):
        walkthrough_text(n)


def test_catalog_mismatch_is_reported():
    w = load_level(1)
    entry = CATALOG[2]
    with pytest.raises(WorldError, match="rooms: expected 7, got 4"):
        check_level(w, entry)


def test_unknown_room_in_exit_rejected():
    text = level_text(1).replace('exits = { west = "open_space" }', 'exits = { west = "attic" }')
    with pytest.raises(WorldError):
        parse(text)


def test_level_file_version_checked():
    text = level_text(1).replace("format = 1", "format = 99")
    with pytest.raises(WorldError):
        parse(text)


@pytest.mark.parametrize("n", range(1, 8))
def test_vocabulary_covers_all_text(n):
    import re

    w = load_level(n)
    vocab = set(w.vocabulary())
    texts = [w.command_text(c) for c in w.action_set]
    texts += [t.feedback for t in run_commands(w, walkthrough(n))]
    for t in texts:
        assert set(re.findall(r"[a-z0-9]+", t.lower())) <= vocab
