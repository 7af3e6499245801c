import numpy as np
import pytest

from fairsmote.data import ClassSpec, Dataset, FeatureKind, ProtectedSpec

ROOT = __import__("pathlib").Path(__file__).resolve().parent.parent
ADULT_CSV = ROOT / "data" / "adult.csv"
GERMAN_CSV = ROOT / "data" / "german.csv"
CONFIGS = ROOT / "configs"

SEX = ProtectedSpec("sex", "m", "f")
RACE = ProtectedSpec("race", "w", "nw")
INCOME = ClassSpec("y", "yes", "no")


def make_dataset(n=200, seed=0, two_attrs=False, skew=True):
    """Mixed-type fixture with label and group imbalance."""
    rng = np.random.default_rng(seed)
    sex = (rng.random(n) < 0.65).astype(int)
    race = (rng.random(n) < 0.7).astype(int)
    x = rng.random(n)
    z = rng.random(n)
    color = rng.choice(np.array(["red", "green", "blue"], dtype=object), n)
    flag = (rng.random(n) < 0.5).astype(int)
    logit = 3 * (x - 0.5) + (1.2 * sex if skew else 0) + 0.5 * flag - 0.6
    y = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(int)
    schema = [("x", FeatureKind.NUMERIC), ("z", FeatureKind.NUMERIC), ("color", FeatureKind.CATEGORICAL),
              ("flag", FeatureKind.BOOLEAN), ("sex", FeatureKind.BOOLEAN)]
    cols = {"x": x, "z": z, "color": color, "flag": flag, "sex": sex}
    protected = (SEX,)
    if two_attrs:
        schema.append(("race", FeatureKind.BOOLEAN))
        cols["race"] = race
        protected = (SEX, RACE)
    return Dataset(tuple(schema), cols, y, INCOME, protected)


@pytest.fixture
def mixed():
    return make_dataset()


@pytest.fixture
def mixed2():
    return make_dataset(n=400, seed=1, two_attrs=True)


def write_csv(path, header, rows):
    path.write_text("\n".join([",".join(header)] + [",".join(map(str, r)) for r in rows]) + "\n")
    return path


def write_bench_files(tmp_path, n=120, seed=0, pipelines=("default",), folds=2, repeats=1):
    rng = np.random.default_rng(seed)
    lines = ["score,grade,sex,outcome"]
    for _ in range(n):
        sex = "m" if rng.random() < 0.6 else "f"
        score = int(rng.integers(0, 100))
        grade = rng.choice(["a", "b", "c"])
        p = 1 / (1 + np.exp(-(score - 50) / 15 - (0.8 if sex == "m" else 0)))
        lines.append(f"{score},{grade},{sex},{'good' if rng.random() < p else 'bad'}")
    (tmp_path / "toy.csv").write_text("\n".join(lines) + "\n")
    (tmp_path / "toy.yaml").write_text(
        "name: toy\npath: toy.csv\n"
        "columns: {score: numeric, grade: categorical, sex: categorical}\n"
        "class: {column: outcome, favorable: good, unfavorable: bad}\n"
        "protected: [{column: sex, privileged: m, unprivileged: f}]\n"
    )
    (tmp_path / "plan.yaml").write_text(
        f"dataset: toy.yaml\nprotected: [sex]\npipelines: [{', '.join(pipelines)}]\n"
        f"folds: {folds}\nrepeats: {repeats}\nseed: 3\n"
        "learner: {iterations: 200}\n"
    )
    return tmp_path / "plan.yaml"


# acceptance verdicts, printed as a block at the end of the session
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda l: l.split()[1]):
            terminalreporter.write_line(line)
