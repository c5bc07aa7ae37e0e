"""
Command writing a synthetic dataset directory.
"""

import logging
from typing import Any, Dict

from uvds.commands.common import success
from uvds.synthetic import gen_synthetic

logger = logging.getLogger(__name__)


class GenSyntheticCommand:
    """Generate features/attributes/labels/meta for a desk-scale benchmark."""

    def execute(self, out: str, **kwargs) -> Dict[str, Any]:
        values = {k: v for k, v in kwargs.items() if v is not None}
        logger.info(f"Generating synthetic dataset into {out}")
        summary = gen_synthetic(out, **values)
        return success(out=out, **summary)
