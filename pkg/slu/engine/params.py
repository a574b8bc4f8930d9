"""Named parameter storage, initialization and checkpoint archives."""

import json
import logging
from collections import OrderedDict
from pathlib import Path
import zipfile
from typing import Dict, Iterator, Mapping, Optional, Tuple, Union

import numpy as np

from .tensor import ShapeError, Tensor

logger = logging.getLogger(__name__)

HEADER_KEY = "__header__"


class CheckpointError(ValueError):
    """Raised for unreadable or inconsistent checkpoint archives."""


class ParameterStore:
    """
    Ordered collection of named trainable tensors.

    Weight matrices are drawn uniformly from ``[-sqrt(1/fan_in), +sqrt(1/fan_in)]``
    and biases start at zero. Every parameter carries a gradient accumulator
    of its own shape.
    """

    def __init__(self, seed: int = 0, dtype=np.float64):
        """
        Initialize an empty store.

        Args:
            seed: Seed of the initialization RNG
            dtype: numpy float dtype of all parameters
        """
        self.seed = seed
        self.dtype = np.dtype(dtype)
        self._rng = np.random.default_rng(seed)
        self._params: "OrderedDict[str, Tensor]" = OrderedDict()

    def _register(self, name: str, data: np.ndarray) -> Tensor:
        if name in self._params:
            raise KeyError(f"Parameter already defined: {name}")
        tensor = Tensor(data.astype(self.dtype), requires_grad=True, name=name)
        tensor.grad = np.zeros_like(tensor.data)
        self._params[name] = tensor
        return tensor

    def uniform(self, name: str, shape: Tuple[int, ...], fan_in: Optional[int] = None) -> Tensor:
        """Create a weight drawn from the fan-in scaled uniform distribution."""
        fan_in = fan_in if fan_in is not None else shape[0]
        bound = np.sqrt(1.0 / fan_in)
        return self._register(name, self._rng.uniform(-bound, bound, size=shape))

    def zeros(self, name: str, shape: Tuple[int, ...]) -> Tensor:
        """Create a zero-initialized parameter (biases)."""
        return self._register(name, np.zeros(shape))

    def __getitem__(self, name: str) -> Tensor:
        return self._params[name]

    def __contains__(self, name: str) -> bool:
        return name in self._params

    def __iter__(self) -> Iterator[str]:
        return iter(self._params)

    def __len__(self) -> int:
        return len(self._params)

    def items(self):
        return self._params.items()

    def names(self):
        return list(self._params)

    def shapes(self) -> Dict[str, Tuple[int, ...]]:
        return {name: p.shape for name, p in self._params.items()}

    @property
    def num_parameters(self) -> int:
        return int(sum(p.data.size for p in self._params.values()))

    def zero_grad(self):
        for p in self._params.values():
            if p.grad is None or p.grad.shape != p.data.shape:
                p.grad = np.zeros_like(p.data)
            else:
                p.grad.fill(0.0)

    def grads(self) -> Dict[str, np.ndarray]:
        return {name: p.grad for name, p in self._params.items()}

    def snapshot(self) -> Dict[str, np.ndarray]:
        """Read-only copies of all parameter values."""
        state = {}
        for name, p in self._params.items():
            copy = p.data.copy()
            copy.setflags(write=False)
            state[name] = copy
        return state

    def load_state(self, state: Mapping[str, np.ndarray], strict: bool = True):
        """
        Overwrite parameter values from a name → array mapping.

        Args:
            state: Parameter values
            strict: Require exactly the same names as the store
        """
        if strict:
            missing = set(self._params) - set(state)
            unexpected = set(state) - set(self._params)
            if missing or unexpected:
                raise CheckpointError(
                    f"Parameter names differ (missing: {sorted(missing)}, unexpected: {sorted(unexpected)})"
                )
        for name, value in state.items():
            if name not in self._params:
                continue
            target = self._params[name]
            if tuple(np.shape(value)) != target.shape:
                raise ShapeError(f"load_state: {name} has shape {np.shape(value)}, expected {target.shape}")
            target.data = np.array(value, dtype=self.dtype)
            target.grad = np.zeros_like(target.data)

    def all_finite(self) -> bool:
        return all(np.all(np.isfinite(p.data)) for p in self._params.values())


def save_checkpoint(path: Union[str, Path], state: Mapping[str, np.ndarray], header: Dict) -> Path:
    """
    Write parameters and a JSON header into one ``.npz`` archive.

    Payloads are stored as little-endian 32-bit floats.

    Args:
        path: Output file
        state: Parameter name → array
        header: JSON-serializable metadata (variant, hyperparameters, ...)

    Returns:
        Path written
    """
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrays = {name: np.asarray(value, dtype="<f4") for name, value in state.items()}
    if HEADER_KEY in arrays:
        raise CheckpointError(f"Reserved parameter name: {HEADER_KEY}")
    header_bytes = json.dumps(header, sort_keys=True).encode("utf-8")
    arrays[HEADER_KEY] = np.frombuffer(header_bytes, dtype=np.uint8)
    with open(path, "wb") as f:
        np.savez(f, **arrays)
    logger.debug("Saved checkpoint %s (%d tensors)", path, len(state))
    return path


def load_checkpoint(path: Union[str, Path]) -> Tuple[Dict[str, np.ndarray], Dict]:
    """
    Read an archive written by ``save_checkpoint``.

    Returns:
        Tuple of (parameter state, header)
    """
    path = Path(path)
    if not path.exists():
        raise CheckpointError(f"Checkpoint not found: {path}")
    try:
        with np.load(path, allow_pickle=False) as archive:
            if HEADER_KEY not in archive.files:
                raise CheckpointError(f"{path}: missing header")
            header = json.loads(archive[HEADER_KEY].tobytes().decode("utf-8"))
            state = {name: archive[name] for name in archive.files if name != HEADER_KEY}
    except (OSError, ValueError, zipfile.BadZipFile) as e:
        if isinstance(e, CheckpointError):
            raise
        raise CheckpointError(f"{path}: unreadable checkpoint ({e})") from e
    return state, header
