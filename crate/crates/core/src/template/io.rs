//! `templates/v1` and `dags/v1` record files.

use thiserror::Error;

use super::{Template, TemplateDag, TemplateError};
use crate::format::{read_records, write_records, FormatError, DAGS_V1, TEMPLATES_V1};

#[derive(Debug, Error)]
pub enum TemplateIoError {
    #[error(transparent)]
    Format(#[from] FormatError),
    #[error("record {index}: {source}")]
    Invalid {
        index: usize,
        #[source]
        source: TemplateError,
    },
}

pub fn read_templates(text: &str) -> Result<Vec<Template>, TemplateIoError> {
    let templates: Vec<Template> = read_records(text, TEMPLATES_V1)?;
    for (index, t) in templates.iter().enumerate() {
        t.validate().map_err(|source| TemplateIoError::Invalid { index, source })?;
    }
    Ok(templates)
}

pub fn write_templates(templates: &[Template]) -> Result<String, FormatError> {
    write_records(TEMPLATES_V1, templates)
}

pub fn read_dags(text: &str) -> Result<Vec<TemplateDag>, TemplateIoError> {
    let dags: Vec<TemplateDag> = read_records(text, DAGS_V1)?;
    for (index, d) in dags.iter().enumerate() {
        d.validate().map_err(|source| TemplateIoError::Invalid { index, source })?;
    }
    Ok(dags)
}

pub fn write_dags(dags: &[TemplateDag]) -> Result<String, FormatError> {
    write_records(DAGS_V1, dags)
}
