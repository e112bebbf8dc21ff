from .chain import (
    ZERO_HASH,
    AnchorRecord,
    BaseChain,
    Block,
    ChainFormatError,
    DataTx,
    EsadTx,
    EsarTx,
    LedgerError,
    LedgerTx,
    SideChain,
    address_of,
    agreements_in_force,
    anchor,
    block_hash,
    export_base,
    export_chain,
    import_base,
    import_chain,
    interchain_latency,
    tx_record,
    verify_anchors,
    verify_chain,
)
from .merkle import EMPTY_ROOT, InclusionProof, leaf_hash, merkle_proof, merkle_root, node_hash, verify_proof

__all__ = [
    "AnchorRecord",
    "BaseChain",
    "Block",
    "ChainFormatError",
    "DataTx",
    "EMPTY_ROOT",
    "EsadTx",
    "EsarTx",
    "InclusionProof",
    "LedgerError",
    "LedgerTx",
    "SideChain",
    "ZERO_HASH",
    "address_of",
    "agreements_in_force",
    "anchor",
    "block_hash",
    "export_base",
    "export_chain",
    "import_base",
    "import_chain",
    "interchain_latency",
    "leaf_hash",
    "merkle_proof",
    "merkle_root",
    "node_hash",
    "tx_record",
    "verify_anchors",
    "verify_chain",
    "verify_proof",
]
