"""Word-guessing game with column-numbered board.

Letters are guessed as "[L]", whole words as "[WORD]" (case-insensitive).
A wrong letter or wrong word costs one of the try budget (default 6).
Hitting the try or step limit pays the fraction of letter positions
already revealed.
"""

from __future__ import annotations

import random

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_FAILURE,
    TERM_GOAL,
    TextEnv,
)

WORDS = (
    "apple", "arrow", "basket", "beacon", "bridge", "bright", "cabin", "candle",
    "canyon", "carpet", "castle", "cherry", "circle", "cloud", "copper", "coral",
    "crane", "crystal", "danger", "dolphin", "dragon", "eagle", "ember", "engine",
    "falcon", "feather", "flame", "forest", "fossil", "garden", "giant", "glacier",
    "goblet", "granite", "hammer", "harbor", "hello", "hollow", "honey", "island",
    "ivory", "jacket", "jungle", "kernel", "ladder", "lantern", "legend", "lemon",
    "lizard", "locket", "magnet", "marble", "meadow", "mirror", "monster", "mountain",
    "needle", "nectar", "ocean", "orange", "orbit", "oyster", "palace", "parrot",
    "pebble", "pepper", "pillow", "pirate", "planet", "plasma", "pocket", "portal",
    "prairie", "puzzle", "quartz", "rabbit", "raven", "riddle", "river", "rocket",
    "saddle", "salmon", "shadow", "shelter", "signal", "silver", "spider", "spiral",
    "spring", "stone", "storm", "sugar", "temple", "thunder", "tiger", "timber",
    "tunnel", "turtle", "valley", "velvet", "violet", "walnut", "whale", "window",
    "winter", "wizard", "wonder", "zephyr",
)


class HangmanEnv(TextEnv):
    env_id = "hangman"
    default_max_steps = 40

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        self.tries_left = int(spec.knobs.get("tries", 6))
        word = spec.knobs.get("word")
        self.word = str(word).upper() if word else self._rng.choice(WORDS).upper()
        self.guessed: list[str] = []

    @property
    def instructions(self) -> str:
        return (
            "You are playing hangman. The hidden word is shown as underscores "
            "under column labels. Guess one letter as \"[L]\" or the whole "
            "word as \"[WORD]\" (case-insensitive). Wrong letter or word "
            "guesses cost one try."
        )

    @property
    def goal_text(self) -> str:
        return f"Guess the hidden {len(self.word)}-letter word."

    def _revealed_positions(self) -> int:
        return sum(1 for ch in self.word if ch in self.guessed)

    def _board(self) -> str:
        header = " ".join(f"C{i:02d}" for i in range(len(self.word)))
        cells = " ".join(
            f" {ch} " if ch in self.guessed else " _ " for ch in self.word
        )
        return header + "\n" + cells

    def _render(self) -> str:
        guessed = ", ".join(sorted(self.guessed)) or "none"
        return (
            f"{self._board()}\n"
            f"Tries remaining: {self.tries_left}\n"
            f"Guessed letters: {guessed}"
        )

    def _initial_observation(self) -> str:
        return self._render()

    def _apply(self, action: str) -> StepResult:
        guess = action.strip().strip("[]").strip().upper()
        if not guess.isalpha():
            raise InvalidAction('guess a letter "[L]" or a word "[WORD]"')
        if len(guess) == 1:
            if guess in self.guessed:
                raise InvalidAction(f"letter {guess} was already guessed")
            self.guessed.append(guess)
            if guess in self.word:
                note = f"Letter {guess} is in the word."
            else:
                self.tries_left -= 1
                note = f"Letter {guess} is not in the word."
            if self._revealed_positions() == len(self.word):
                return self._win(note)
        else:
            if guess == self.word:
                return self._win(f"{guess} is correct!")
            self.tries_left -= 1
            note = f"{guess} is not the word."
        if self.tries_left <= 0:
            return StepResult(
                observation=f"{note}\nOut of tries. The word was {self.word}.",
                reward=self._partial_reward(),
                done=True,
                termination=TERM_FAILURE,
            )
        return StepResult(observation=f"{note}\n{self._render()}")

    def _win(self, note: str) -> StepResult:
        return StepResult(
            observation=f"{note}\nYou guessed the word {self.word}!",
            reward=1.0,
            done=True,
            termination=TERM_GOAL,
        )

    def _partial_reward(self) -> float:
        return self._revealed_positions() / len(self.word)

    def heuristic_action(self, rng: random.Random) -> str:
        for letter in "ETAOINSHRDLUCMFWYPBGVKJXQZ":
            if letter not in self.guessed:
                return f"[{letter}]"
        return f"[{self.word}]"

    def random_action(self, rng: random.Random) -> str:
        pool = [c for c in "ABCDEFGHIJKLMNOPQRSTUVWXYZ" if c not in self.guessed]
        return f"[{rng.choice(pool or list('ABCDEFGHIJKLMNOPQRSTUVWXYZ'))}]"
