import numpy as np
import pytest
from hypothesis import strategies as st

from pca_ergo import ParamQuad

probs = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)
open_probs = st.floats(min_value=1e-3, max_value=1.0 - 1e-3, allow_nan=False)

quads = st.builds(ParamQuad, probs, probs, probs, probs)
positive_quads = st.builds(ParamQuad, open_probs, open_probs,
                           open_probs, open_probs)


def random_quads(n: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).random((n, 4))


@pytest.fixture(scope="session")
def artifacts_dir(tmp_path_factory):
    import pathlib
    d = pathlib.Path(__file__).resolve().parent.parent / "artifacts"
    d.mkdir(exist_ok=True)
    return d
