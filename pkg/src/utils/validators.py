from typing import Optional, Tuple
import logging
import math

logger = logging.getLogger(__name__)


def parse_window(text: Optional[str]) -> Optional[Tuple[float, float, float, float]]:
    """Parse 'x0,y0,x1,y1' into a window tuple"""
    if text is None:
        return None
    try:
        values = tuple(float(v) for v in text.split(','))
    except ValueError as e:
        logger.error(f"Error parsing window {text}: {str(e)}")
        raise ValueError(f"Invalid window: {text}")
    if len(values) != 4 or not all(math.isfinite(v) for v in values):
        raise ValueError(f"Window needs four finite numbers x0,y0,x1,y1, got {text}")
    x0, y0, x1, y1 = values
    if not (x1 > x0 and y1 > y0):
        raise ValueError(f"Degenerate zoom window {text}")
    return values


def parse_overrides(pairs) -> dict:
    """Turn ['key=value', ...] command-line overrides into a dict"""
    overrides = {}
    for pair in pairs or []:
        if '=' not in pair:
            raise ValueError(f"Override must look like key=value, got {pair}")
        key, value = pair.split('=', 1)
        overrides[key.strip()] = value.strip()
    return overrides
