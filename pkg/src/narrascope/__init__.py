"""narrascope: detect narrative emergence in longitudinal text corpora."""

__version__ = "0.1.0"

BUILD_ID = f"narrascope {__version__}"
