//! File formats: MSQ sequences, OBJ frame directories, vertex masks,
//! annotations, `key = value` configs and CSV reports.

mod annotation;
mod csv;
mod kv;
mod mask;
mod msq;
mod obj;

pub use annotation::{annotation_to_text, parse_annotation, read_annotation, write_annotation};
pub use csv::{format_real, parse_csv, write_csv_report, Cell, CsvTable};
pub use kv::{KvEntry, KvFile};
pub use mask::{parse_mask, read_mask, write_mask};
pub use msq::{decode_msq, encode_msq, read_msq, write_msq, MAGIC};
pub use obj::{import_obj_sequence, parse_obj_vertices};
