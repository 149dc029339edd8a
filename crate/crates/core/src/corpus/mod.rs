//! Data model for the four task types, the tokenizer, dataset I/O and NER
//! label realignment.

pub mod bio;
pub mod edit;
pub mod sample;
pub mod token;

pub use bio::{align_ner_labels, AlignError, BioTag};
pub use edit::{Edit, EditLevel, Location, TokenOp};
pub use sample::{read_samples, write_samples, CorpusError, EntityMention, Label, Payload, RecordError, Sample, Task};
pub use token::{detokenize, tokenize, Token, TokenKind, TokenSeq};
