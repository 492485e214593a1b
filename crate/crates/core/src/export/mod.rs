//! Dataset records, the `.kfrg` container, splits and manifests.

mod kfrg;
mod record;
mod split;

pub use kfrg::{
    decode_kfrg, encode_kfrg, read_kfrg, write_kfrg, KfrgArray, KfrgFile, RecordKind, KFRG_MAGIC, KFRG_VERSION,
};
pub use record::{build_records, window_starts, Arch, DatasetRecord, RecordMeta};
pub use split::{
    file_sha256, load_kfrg_dataset, make_split, read_manifest, write_manifest, DatasetManifest, ManifestEntry, Split,
    SplitManifest, MANIFEST_VERSION,
};
