//! HTTP adapters for the places, street view metadata and vision model
//! services. Keys come from the environment only.

use std::time::Duration;

use base64::Engine as _;
use serde::Deserialize;

use crate::coverage::{Panorama, StreetViewError, StreetViewMetaClient};
use crate::geo::GeoPoint;
use crate::guidance::{PanoramaRef, VlmClient, VlmError};
use crate::poi_pipeline::{parse_places_response, PlacesClient, PlacesError, PlacesQuery, PlacesResponse, PoiRecord};
use crate::{Error, Result};

pub const MAPS_KEY_VAR: &str = "GOOGLE_MAPS_API_KEY";
pub const GEMINI_KEY_VAR: &str = "GEMINI_API_KEY";

const PLACES_URL: &str = "https://maps.googleapis.com/maps/api/place/nearbysearch/json";
const STREETVIEW_META_URL: &str = "https://maps.googleapis.com/maps/api/streetview/metadata";
const GEMINI_URL: &str = "https://generativelanguage.googleapis.com/v1beta/models";

/// Nearby Search serves at most three pages per query.
const MAX_PAGES: usize = 3;
/// A fresh page token needs a moment before the provider accepts it.
const PAGE_TOKEN_DELAY: Duration = Duration::from_secs(2);
const STREETVIEW_SEARCH_RADIUS_M: u32 = 50;

fn env_key(var: &str) -> Result<String> {
    std::env::var(var)
        .ok()
        .filter(|k| !k.trim().is_empty())
        .ok_or_else(|| Error::Config(format!("live mode needs the {var} environment variable")))
}

fn http_client() -> Result<reqwest::blocking::Client> {
    reqwest::blocking::Client::builder()
        .timeout(Duration::from_secs(60))
        .build()
        .map_err(|e| Error::Config(format!("http client: {e}")))
}

pub struct GooglePlacesClient {
    http: reqwest::blocking::Client,
    key: String,
}

impl GooglePlacesClient {
    pub fn from_env() -> Result<Self> {
        Ok(GooglePlacesClient {
            http: http_client()?,
            key: env_key(MAPS_KEY_VAR)?,
        })
    }

    fn page(&self, query: &PlacesQuery, token: Option<&str>) -> std::result::Result<PlacesResponse, PlacesError> {
        let transport = |e: reqwest::Error| PlacesError::Transport {
            query: query.to_string(),
            message: e.to_string(),
        };
        let location = format!("{},{}", query.center.lat(), query.center.lon());
        let radius = query.radius_m.to_string();
        let mut params = vec![
            ("location", location.as_str()),
            ("radius", radius.as_str()),
            ("key", self.key.as_str()),
        ];
        if let Some(t) = token {
            params.push(("pagetoken", t));
        }
        let resp = self.http.get(PLACES_URL).query(&params).send().map_err(transport)?;
        if resp.status().is_server_error() {
            return Err(PlacesError::Transport {
                query: query.to_string(),
                message: resp.status().to_string(),
            });
        }
        resp.json().map_err(|e| PlacesError::InvalidResponse(e.to_string()))
    }
}

impl PlacesClient for GooglePlacesClient {
    fn nearby(&self, query: &PlacesQuery) -> std::result::Result<Vec<PoiRecord>, PlacesError> {
        let mut out = Vec::new();
        let mut token: Option<String> = None;
        for page in 0..MAX_PAGES {
            if page > 0 {
                std::thread::sleep(PAGE_TOKEN_DELAY);
            }
            let resp = self.page(query, token.as_deref())?;
            out.extend(parse_places_response(&resp, query)?);
            match resp.next_page_token {
                Some(t) => token = Some(t),
                None => break,
            }
        }
        Ok(out)
    }
}

pub struct StreetViewMetadataClient {
    http: reqwest::blocking::Client,
    key: String,
}

impl StreetViewMetadataClient {
    pub fn from_env() -> Result<Self> {
        Ok(StreetViewMetadataClient {
            http: http_client()?,
            key: env_key(MAPS_KEY_VAR)?,
        })
    }
}

#[derive(Deserialize)]
struct MetadataResponse {
    status: String,
    pano_id: Option<String>,
    location: Option<MetaLocation>,
}

#[derive(Deserialize)]
struct MetaLocation {
    lat: f64,
    lng: f64,
}

impl StreetViewMetaClient for StreetViewMetadataClient {
    fn query(&self, point: &GeoPoint) -> std::result::Result<Option<Panorama>, StreetViewError> {
        let location = format!("{},{}", point.lat(), point.lon());
        let radius = STREETVIEW_SEARCH_RADIUS_M.to_string();
        let resp: MetadataResponse = self
            .http
            .get(STREETVIEW_META_URL)
            .query(&[
                ("location", location.as_str()),
                ("radius", radius.as_str()),
                ("key", self.key.as_str()),
            ])
            .send()
            .and_then(|r| r.json())
            .map_err(|e| StreetViewError(e.to_string()))?;
        match (resp.status.as_str(), resp.pano_id, resp.location) {
            ("OK", Some(pano_id), Some(loc)) => {
                let location = GeoPoint::new(loc.lat, loc.lng).map_err(|e| StreetViewError(e.to_string()))?;
                Ok(Some(Panorama { pano_id, location }))
            }
            ("ZERO_RESULTS", ..) | ("NOT_FOUND", ..) => Ok(None),
            (status, ..) => Err(StreetViewError(status.to_string())),
        }
    }
}

/// Gemini `generateContent` adapter. Panorama images are read from their
/// handle paths and sent inline as base64 JPEG.
pub struct GeminiClient {
    http: reqwest::blocking::Client,
    key: String,
    model_id: String,
}

impl GeminiClient {
    pub fn from_env(model_id: &str) -> Result<Self> {
        Ok(GeminiClient {
            http: http_client()?,
            key: env_key(GEMINI_KEY_VAR)?,
            model_id: model_id.to_string(),
        })
    }
}

impl VlmClient for GeminiClient {
    fn model_id(&self) -> &str {
        &self.model_id
    }

    fn generate(&self, prompt: &str, images: &[PanoramaRef]) -> std::result::Result<String, VlmError> {
        let mut parts = vec![serde_json::json!({ "text": prompt })];
        for img in images {
            let Some(path) = &img.image else { continue };
            let bytes = std::fs::read(path).map_err(|e| VlmError(format!("{path}: {e}")))?;
            parts.push(serde_json::json!({
                "inline_data": {
                    "mime_type": "image/jpeg",
                    "data": base64::engine::general_purpose::STANDARD.encode(bytes),
                }
            }));
        }
        let body = serde_json::json!({ "contents": [{ "parts": parts }] });
        let url = format!("{GEMINI_URL}/{}:generateContent", self.model_id);
        let resp: serde_json::Value = self
            .http
            .post(url)
            .header("x-goog-api-key", &self.key)
            .json(&body)
            .send()
            .and_then(|r| r.error_for_status())
            .and_then(|r| r.json())
            .map_err(|e| VlmError(e.to_string()))?;
        resp["candidates"][0]["content"]["parts"]
            .as_array()
            .map(|ps| {
                ps.iter()
                    .filter_map(|p| p["text"].as_str())
                    .collect::<Vec<_>>()
                    .join("")
            })
            .filter(|t| !t.trim().is_empty())
            .ok_or_else(|| VlmError("response carried no text".into()))
    }
}
