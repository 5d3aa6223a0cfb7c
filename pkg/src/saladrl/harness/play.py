"""Interactive terminal session."""
from __future__ import annotations

import sys

from ..engine import (CommandError, WorldSpec, admissible_set_oracle, initial_feedback, initial_state,
                      parse_command, step)

HELP = "Commands are typed as text, e.g. 'take lettuce'. ':oracle' lists admissible actions, ':quit' exits."


def play(world: WorldSpec, stdin=None, stdout=None) -> int:
    """Run a read-eval-print loop; returns the final score."""
    stdin = stdin or sys.stdin
    stdout = stdout or sys.stdout

    def say(text: str) -> None:
        print(text, file=stdout, flush=True)

    state = initial_state(world)
    say(HELP)
    say(initial_feedback(world, state))
    while True:
        stdout.write("> ")
        stdout.flush()
        line = stdin.readline()
        if not line:
            break
        line = line.split("#", 1)[0].strip()   # so walkthrough files can be piped in
        if not line:
            continue
        if line == ":quit":
            break
        if line == ":oracle":
            cmds = sorted(world.command_text(c) for c in admissible_set_oracle(world, state))
            say("admissible: " + ("; ".join(cmds) if cmds else "(none)"))
            continue
        if line == ":help":
            say(HELP)
            continue
        try:
            tr = step(world, state, world.action_index(parse_command(world, line)))
        except CommandError as exc:
            say(f"error: {exc}")
            continue
        state = tr.next_state
        say(tr.feedback)
        say(f"[reward {tr.reward}  score {state.score}/{world.max_score}  admissible {tr.admissible}]")
        if tr.done:
            say(f"Final score: {state.score}")
            break
    return state.score

