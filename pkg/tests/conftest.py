"""Shared fixtures: a small synthetic corpus, and discovery of the real
dataset / pretrained vectors through environment variables.

STORYTOPICS_CROWDRE   path to the annotated requirements CSV
STORYTOPICS_WORD2VEC  path to a pretrained word2vec binary

Tests that need either file skip cleanly when it is absent. Acceptance
tests register their outcome so a one-line-per-criterion summary prints
after the run regardless of output capturing.
"""

from __future__ import annotations

import csv
import os
import time
from pathlib import Path

import pytest

import storytopics as st

_SESSION_T0 = time.time()

_ROWS = [
    ("1", "pet owner", "my smart home to let me know when the dog uses the doggy door", "I can keep track of the pets whereabouts", "Health", "Pets, Dogs"),
    ("2", "music lover", "to play loud music in every room of the house", "I can enjoy my favorite songs anywhere", "Entertainment", "Music"),
    ("3", "frugal person", "the thermostat to lower the heat at night", "I can save money on energy costs", "Energy", "Thermostat"),
    ("4", "parent", "an alert when the front door opens at night", "my kids stay safe inside", "Safety", "Doors, Alerts"),
    ("5", "busy cook", "the oven to preheat on my way home", "dinner is ready sooner", "Other", "Kitchen"),
    ("6", "pet owner", "a camera to watch the dog during the day", "I know the dog is doing fine", "Health", "Pets, Cameras"),
    ("7", "music lover", "speakers that follow me from room to room", "my music is always around me", "Entertainment", "Music, Speakers"),
    ("8", "frugal person", "lights to turn off in empty rooms", "energy is not wasted on nobody", "Energy", "Lights"),
    ("9", "runner", "the treadmill to log my workouts and heart rate", "I can track my health progress", "Health", "Fitness"),
    ("10", "movie fan", "the tv to resume my show in any room", "I never miss a scene of my show", "Entertainment", "TV"),
    ("11", "commuter", "the a/c to cool the house before I arrive", "the house feels comfortable right away", "Energy", "AC"),
    ("12", "night guard", "cameras to record any movement outside", "I can review who came by my house", "Safety", "Cameras"),
    ("13", "grandchild", "a fall sensor to call for help for grandma", "she gets help quickly after a fall", "Health", "Sensors"),
    ("14", "party host", "the lights to sync with the music at parties", "my guests enjoy the party atmosphere", "Entertainment", "Lights, Music"),
    ("15", "saver", "solar panels to charge the battery during the day", "evening power comes from the battery", "Energy", "Solar"),
    ("16", "traveler", "the alarm to arm itself when nobody is home", "the house is protected while I travel", "Safety", "Alarm"),
    ("17", "chef", "the fridge to track expiry dates of food", "no food goes to waste in my kitchen", "Other", "Kitchen, Fridge"),
    ("18", "sleeper", "the blinds to open slowly with the sunrise", "I wake up gently every morning", "Other", "Blinds"),
    ("19", "asthmatic", "an air quality monitor to warn me about dust", "I can breathe safely in my house", "Health", "Air"),
    ("20", "gamer", "the console to pause when someone rings the bell", "I never lose progress in my game", "Entertainment", "Games"),
    ("21", "accountant", "a weekly report of electricity usage per device", "I can spot devices wasting energy", "Energy", "Reports"),
    ("22", "parent", "the stove to shut off when left unattended", "the kids cannot start a fire", "Safety", "Stove"),
    ("23", "smart home owner", "to be able to", "it", "Other", ""),
    ("24", "dog walker", "the doggy door to unlock only for my dog", "strange animals stay out of the house", "Safety", "Pets, Doors"),
]


def write_corpus_csv(path: Path, rows=None) -> Path:
    rows = _ROWS if rows is None else rows
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["id", "role", "feature", "benefit", "domain", "tags"])
        writer.writerows(rows)
    return path


@pytest.fixture(scope="session")
def corpus_csv(tmp_path_factory) -> Path:
    return write_corpus_csv(tmp_path_factory.mktemp("data") / "stories.csv")


@pytest.fixture(scope="session")
def corpus(corpus_csv) -> st.Corpus:
    return st.load_corpus(corpus_csv)


@pytest.fixture(scope="session")
def prepped(corpus):
    """(tokenized stories, vocab before filtering, vocab after filtering)."""
    return st.preprocess_corpus(corpus)


@pytest.fixture(scope="session")
def crowdre_path():
    path = os.environ.get("STORYTOPICS_CROWDRE")
    if path and Path(path).is_file():
        return Path(path)
    return None


@pytest.fixture(scope="session")
def word2vec_path():
    path = os.environ.get("STORYTOPICS_WORD2VEC")
    if path and Path(path).is_file():
        return Path(path)
    return None


# --- acceptance summary -------------------------------------------------------

ACCEPTANCE_RESULTS: dict[int, tuple[str, str]] = {}


def record_acceptance(number: int, status: str, detail: str = "") -> None:
    ACCEPTANCE_RESULTS[number] = (status, detail)


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        status, detail = ACCEPTANCE_RESULTS[number]
        line = f"criterion {number}: {status}"
        if detail:
            line += f" ({detail})"
        terminalreporter.write_line(line)
    wall = time.time() - _SESSION_T0
    terminalreporter.write_line(
        f"suite wall time: {wall:.1f}s (criterion 9 budget without dataset: 300s)"
    )
