"""
Malliavin Weights
First and second order weights, the switch factors M, V and P, and a
product accumulator kept both plainly and in sign/log form
"""
import math
from dataclasses import dataclass

from utils.errors import DomainError


@dataclass(frozen=True)
class WeightProduct:
    """Running product of switch factors"""
    sign: int = 1
    log_magnitude: float = 0.0
    plain_value: float = 1.0

    @classmethod
    def identity(cls):
        return cls()

    @property
    def log_value(self):
        """sign * exp(log_magnitude), +-inf when out of range"""
        if self.sign == 0:
            return 0.0
        if self.log_magnitude >= 709.0:
            return math.copysign(math.inf, self.sign)
        return self.sign * math.exp(self.log_magnitude)

    def scaled(self, factor):
        """
        Product times a final factor, and whether the log form was needed.

        The plain product is used while it stays finite and nonzero; otherwise
        the value is rebuilt from the sign/log form.
        """
        plain = self.plain_value * factor
        if math.isfinite(plain) and (plain != 0.0 or self.sign == 0 or factor == 0.0):
            return plain, False
        combined = accumulate(self, factor)
        return combined.log_value, True


def weight_w1(sigma: float, dW: float, dT: float) -> float:
    """First order weight sigma^-1 dW / dT"""
    return dW / (sigma * dT)


def weight_w2(sigma: float, dW: float, dT: float) -> float:
    """Second order weight sigma^-2 (dW^2 - dT) / dT^2"""
    return (dW * dW - dT) / (sigma * sigma * dT * dT)


def factor_m(delta_b: float, sigma: float, dW: float, dT: float) -> float:
    """Drift-change factor M = delta_b * W1"""
    return delta_b * weight_w1(sigma, dW, dT)


def factor_v(sigma_prev: float, sigma_cur: float, dW: float, dT: float) -> float:
    """Diffusion factor V = -1/2 sigma_prev^2 W2(sigma_cur)"""
    return -0.5 * sigma_prev * sigma_prev * weight_w2(sigma_cur, dW, dT)


def switch_factor_p(m: float, v: float, f_prev: float, half_v: bool = False) -> float:
    """P = (M + V) / f(dT_prev); half_v selects the (M + V/2) variant"""
    if not f_prev > 0:
        raise DomainError(f"switch factor needs a positive density, got {f_prev}")
    if half_v:
        v = 0.5 * v
    return (m + v) / f_prev


def accumulate(state: WeightProduct, factor: float) -> WeightProduct:
    """Multiply one factor into the product"""
    plain = state.plain_value * factor
    if state.sign == 0 or factor == 0.0:
        return WeightProduct(0, -math.inf, plain)
    sign = state.sign if factor > 0 else -state.sign
    return WeightProduct(sign, state.log_magnitude + math.log(abs(factor)), plain)
