//! Fixture paths and a stub-backed bundle for the app tests.

#![allow(dead_code)]

use std::path::PathBuf;

use insightloom::bundle::Bundle;
use insightloom::pipeline::{run_pipeline, BackendChoice, PipelineOptions};
use insightloom_core::dashboard::{load_dashboard, DashboardSpec};

pub fn fixtures() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures")
}

pub fn spec_path() -> PathBuf {
    fixtures().join("callcenter.json")
}

pub fn spec() -> DashboardSpec {
    load_dashboard(&std::fs::read_to_string(spec_path()).unwrap()).unwrap()
}

pub fn stub_options() -> PipelineOptions {
    PipelineOptions {
        backend: BackendChoice::Stub { script: None },
        ..Default::default()
    }
}

pub fn stub_bundle() -> Bundle {
    run_pipeline(&spec_path(), &stub_options()).unwrap()
}
