"""Crafting environment over a seeded synthetic recipe DAG.

A target item sits at the root of a generated crafting graph (default
depth 4, 2-3 ingredients per recipe, occasional shared sub-items). Leaf
items are gathered with ``get``; everything else is crafted once its
ingredients are in the inventory. Reward is 1 only when the target item
is crafted.
"""

from __future__ import annotations

import random
import re
from collections import Counter

from inertia.envs.base import (
    EnvSpec,
    InvalidAction,
    StepResult,
    TERM_GOAL,
    TextEnv,
)

_SYLLABLES = (
    "bar", "cin", "dor", "fen", "gla", "hol", "jun", "kel", "lum", "mor",
    "nix", "oak", "pel", "qua", "rus", "sil", "tor", "umb", "ven", "wex",
    "yar", "zin",
)
_MATERIALS = ("ingot", "plank", "shard", "gear", "rod", "cloth", "dust", "block")


def _make_name(rng: random.Random, used: set) -> str:
    for _ in range(1000):
        name = rng.choice(_SYLLABLES) + rng.choice(_SYLLABLES) + " " + rng.choice(_MATERIALS)
        if name not in used:
            used.add(name)
            return name
    raise RuntimeError("name space exhausted")


def generate_recipes(rng: random.Random, depth: int, max_branch: int = 3) -> tuple[str, dict]:
    """Build a crafting DAG level by level; returns (target, recipes) where
    recipes maps item -> ingredient list and leaves are absent from it."""
    used: set = set()
    target = _make_name(rng, used)
    levels: list[list[str]] = [[target]]
    recipes: dict[str, list[str]] = {}
    for d in range(depth):
        next_level: list[str] = []
        for item in levels[d]:
            k = rng.randint(2, max_branch)
            ingredients = []
            for _ in range(k):
                if next_level and rng.random() < 0.3:
                    pick = rng.choice(sorted(set(next_level)))
                    if pick not in ingredients:
                        ingredients.append(pick)
                        continue
                fresh = _make_name(rng, used)
                next_level.append(fresh)
                ingredients.append(fresh)
            recipes[item] = ingredients
        levels.append(next_level)
    return target, recipes


def plan_actions(target: str, recipes: dict, inventory: Counter) -> list[str]:
    """Full get/craft action sequence finishing the target from the given
    inventory (recipe graph is acyclic by construction)."""
    inv = Counter(inventory)
    plan: list[str] = []

    def need(item: str) -> None:
        if inv[item] > 0:
            inv[item] -= 1
            return
        if item not in recipes:
            plan.append(f"get {item}")
            return
        for ing in recipes[item]:
            need(ing)
        plan.append(f"craft {item} using " + ", ".join(recipes[item]))

    need(target)
    return plan


class TextCraftEnv(TextEnv):
    env_id = "textcraft"
    default_max_steps = 80

    def __init__(self, spec: EnvSpec):
        super().__init__(spec)
        depth = int(spec.knobs.get("depth", 4))
        branch = int(spec.knobs.get("branch", 3))
        # redraw graphs whose full plan would not fit in the step budget
        for _ in range(50):
            self.target, self.recipes = generate_recipes(self._rng, depth, branch)
            if len(plan_actions(self.target, self.recipes, Counter())) <= int(self.max_steps * 0.8):
                break
        self.inventory: Counter = Counter()

    @property
    def instructions(self) -> str:
        return (
            "You are crafting items. Commands: \"craft <item> using "
            "<ingredient>, <ingredient>, ...\" consumes the listed "
            "ingredients from your inventory; \"get <item>\" gathers a raw "
            "item; \"inventory\" lists what you hold. Only raw items can be "
            "gathered; crafted items need their exact recipe."
        )

    @property
    def goal_text(self) -> str:
        return f"Craft a {self.target}.\n\n{self._recipe_book()}"

    def _recipe_book(self) -> str:
        lines = [
            f"craft {item} using " + ", ".join(ings)
            for item, ings in sorted(self.recipes.items())
        ]
        return "Crafting commands:\n" + "\n".join(lines)

    def _initial_observation(self) -> str:
        return "You stand at an empty workbench. Your inventory is empty."

    def _render_inventory(self) -> str:
        if not +self.inventory:
            return "Inventory: empty"
        items = ", ".join(f"{n} {item}" for item, n in sorted(self.inventory.items()) if n > 0)
        return f"Inventory: {items}"

    _CRAFT_RE = re.compile(r"^craft\s+(.+?)\s+using\s+(.+)$", re.IGNORECASE)
    _GET_RE = re.compile(r"^get\s+(.+)$", re.IGNORECASE)

    def _apply(self, action: str) -> StepResult:
        text = action.strip().strip("[]").strip().lower()
        if text == "inventory":
            return StepResult(observation=self._render_inventory())
        m = self._GET_RE.match(text)
        if m:
            item = m.group(1).strip()
            if item in self.recipes:
                return StepResult(
                    observation=f"You cannot gather {item}; it must be crafted."
                )
            if item != self.target and not self._known_item(item):
                return StepResult(observation=f"There is no {item} here.")
            self.inventory[item] += 1
            return StepResult(observation=f"Got 1 {item}. {self._render_inventory()}")
        m = self._CRAFT_RE.match(text)
        if m:
            return self._craft(m.group(1).strip(), m.group(2))
        raise InvalidAction('use "craft <item> using <ingredients>", "get <item>", or "inventory"')

    def _known_item(self, item: str) -> bool:
        if item in self.recipes:
            return True
        return any(item in ings for ings in self.recipes.values())

    def _craft(self, item: str, ing_text: str) -> StepResult:
        listed = [part.strip() for part in ing_text.split(",") if part.strip()]
        recipe = self.recipes.get(item)
        if recipe is None:
            return StepResult(observation=f"{item} has no crafting recipe.")
        if sorted(listed) != sorted(recipe):
            return StepResult(
                observation=f"Wrong recipe for {item}. It needs: " + ", ".join(recipe)
            )
        missing = [ing for ing in recipe if self.inventory[ing] < 1]
        if missing:
            return StepResult(
                observation="You are missing: " + ", ".join(sorted(missing))
            )
        for ing in recipe:
            self.inventory[ing] -= 1
        self.inventory[item] += 1
        if item == self.target:
            return StepResult(
                observation=f"Crafted 1 {item}. Task complete!",
                reward=1.0,
                done=True,
                termination=TERM_GOAL,
            )
        return StepResult(observation=f"Crafted 1 {item}. {self._render_inventory()}")

    def optimal_hint(self) -> str | None:
        if self.done:
            return None
        plan = plan_actions(self.target, self.recipes, self.inventory)
        return plan[0] if plan else None

    def heuristic_action(self, rng: random.Random) -> str:
        return self.optimal_hint() or "inventory"

    def random_action(self, rng: random.Random) -> str:
        leaves = sorted(
            {ing for ings in self.recipes.values() for ing in ings if ing not in self.recipes}
        )
        choice = rng.random()
        if choice < 0.5 and leaves:
            return f"get {rng.choice(leaves)}"
        if choice < 0.8:
            item = rng.choice(sorted(self.recipes))
            return f"craft {item} using " + ", ".join(self.recipes[item])
        return "inventory"
