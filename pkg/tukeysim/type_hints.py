from typing import Union

import numpy as np
import numpy.typing as npt

Number = Union[int, float]
PrimitiveType = Union[str, int, bool, float]

FloatArray = npt.NDArray[np.float64]
ComplexArray = npt.NDArray[np.complex128]
IntArray = npt.NDArray[np.int64]
