from .cipher import (
    AuditRecord,
    CipherKey,
    CipherScheme,
    ImageBytes,
    correlation_audit,
    decrypt,
    decrypt_array,
    encrypt,
    encrypt_array,
    keystream_block,
)
