from apps.cpfm.tensor.functional import concat, concat_seq, layernorm_nobias, mse, softmax
from apps.cpfm.tensor.gradcheck import grad_check, grad_check_tensors
from apps.cpfm.tensor.optim import Adam, AdamResult, AdamState, adam_step
from apps.cpfm.tensor.tensor import Tensor, as_tensor, backward, is_grad_enabled, no_grad, zero_grad

__all__ = [
    'Adam',
    'AdamResult',
    'AdamState',
    'Tensor',
    'adam_step',
    'as_tensor',
    'backward',
    'concat',
    'concat_seq',
    'grad_check',
    'grad_check_tensors',
    'is_grad_enabled',
    'layernorm_nobias',
    'mse',
    'no_grad',
    'softmax',
    'zero_grad',
]
