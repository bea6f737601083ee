from goas.nn.autodiff import Tensor, no_grad
from goas.nn.backend import active_backend, set_backend

__all__ = ["Tensor", "no_grad", "active_backend", "set_backend"]
