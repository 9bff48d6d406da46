use std::time::Duration;

use anyhow::{bail, Result};
use sgp_core::embed::{ClientConfig, Embedder, ReferenceEmbedder, RemoteEmbedder, ServiceClient};

use crate::{service_err, ClientArgs, EmbedArgs};

pub fn client_config(args: &ClientArgs) -> ClientConfig {
    ClientConfig {
        timeout: Duration::from_secs(args.timeout),
        batch_size: args.batch_size,
        max_in_flight: args.max_in_flight,
        token: std::env::var("SGP_SERVICE_TOKEN").ok().filter(|t| !t.is_empty()),
    }
}

/// Explicit URL first, then SGP_SERVICE_URL.
pub fn service_url(explicit: Option<&str>) -> Option<String> {
    explicit
        .map(str::to_string)
        .or_else(|| std::env::var("SGP_SERVICE_URL").ok().filter(|u| !u.is_empty()))
}

/// Connects and health-checks the service.
pub fn connect(url: &str, args: &ClientArgs) -> Result<ServiceClient> {
    let client = ServiceClient::new(url, client_config(args));
    client.health().map_err(service_err)?;
    Ok(client)
}

pub struct EmbedderSet {
    pub text: Box<dyn Embedder>,
    pub image: Box<dyn Embedder>,
    pub remote: bool,
}

impl EmbedderSet {
    pub fn from_args(args: &EmbedArgs) -> Result<Self> {
        if args.mock_embedder {
            return Ok(Self { text: Box::new(ReferenceEmbedder), image: Box::new(ReferenceEmbedder), remote: false });
        }
        let Some(url) = service_url(args.service_url.as_deref()) else {
            bail!("exactly one of --service-url (or SGP_SERVICE_URL) and --mock-embedder is required");
        };
        let client = connect(&url, &args.client)?;
        Ok(Self {
            text: Box::new(RemoteEmbedder::new(client.clone(), args.text_model.clone())),
            image: Box::new(RemoteEmbedder::new(client, args.image_model.clone())),
            remote: true,
        })
    }
}
