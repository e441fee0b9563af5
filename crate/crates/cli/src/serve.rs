//! Static file server for results.json and the map application bundle.

use std::fs;
use std::path::{Component, Path, PathBuf};

use anyhow::{anyhow, Context, Result};
use tiny_http::{Header, Request, Response, Server};

const PLACEHOLDER: &str = "<!doctype html><meta charset=\"utf-8\"><title>excellence-mapper</title>\
<p>No map application bundle configured (use <code>--ui-dir</code>). \
Results are available at <a href=\"results.json\">results.json</a>.</p>\n";

pub fn run(results: &Path, host: &str, port: u16, ui_dir: Option<&Path>) -> Result<()> {
    if !results.is_file() {
        return Err(anyhow!("results file {} not found", results.display()));
    }
    let server = Server::http((host, port)).map_err(|e| anyhow!("cannot bind {host}:{port}: {e}"))?;
    log::info!("serving on http://{host}:{port}/");
    for request in server.incoming_requests() {
        if let Err(e) = handle(request, results, ui_dir) {
            log::warn!("request failed: {e:#}");
        }
    }
    Ok(())
}

fn handle(request: Request, results: &Path, ui_dir: Option<&Path>) -> Result<()> {
    let url = request.url().split(['?', '#']).next().unwrap_or("/").to_string();
    if request.method() != &tiny_http::Method::Get && request.method() != &tiny_http::Method::Head {
        return Ok(request.respond(Response::from_string("method not allowed").with_status_code(405))?);
    }
    let response = match route(&url, results, ui_dir) {
        Some((body, mime)) => Response::from_data(body).with_header(content_type(mime)),
        None => Response::from_data(b"not found".to_vec()).with_status_code(404),
    };
    request.respond(response).context("writing response")
}

/// Resolves a request path to file contents and a MIME type.
pub(crate) fn route(url: &str, results: &Path, ui_dir: Option<&Path>) -> Option<(Vec<u8>, &'static str)> {
    if url == "/results.json" {
        return fs::read(results).ok().map(|b| (b, "application/json"));
    }
    let Some(dir) = ui_dir else {
        return (url == "/" || url == "/index.html").then(|| (PLACEHOLDER.as_bytes().to_vec(), "text/html; charset=utf-8"));
    };
    let rel = if url == "/" { "index.html" } else { url.trim_start_matches('/') };
    let path = safe_join(dir, rel)?;
    let body = fs::read(&path).ok()?;
    Some((body, mime_for(&path)))
}

fn safe_join(base: &Path, rel: &str) -> Option<PathBuf> {
    let rel = Path::new(rel);
    if rel.components().any(|c| !matches!(c, Component::Normal(_))) {
        return None;
    }
    Some(base.join(rel))
}

fn mime_for(path: &Path) -> &'static str {
    match path.extension().and_then(|e| e.to_str()).unwrap_or("") {
        "html" => "text/html; charset=utf-8",
        "js" | "mjs" => "text/javascript",
        "css" => "text/css",
        "json" => "application/json",
        "svg" => "image/svg+xml",
        "png" => "image/png",
        "map" => "application/json",
        _ => "application/octet-stream",
    }
}

fn content_type(mime: &str) -> Header {
    Header::from_bytes("Content-Type", mime).expect("static header is valid")
}
