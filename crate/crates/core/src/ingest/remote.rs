//! Client for E-utilities compatible bibliographic services.
//!
//! A search (`esearch.fcgi`) returns record ids; records are then fetched in
//! batches (`efetch.fcgi`, `retmode=xml`) and the PubmedArticle XML subset is
//! converted to [`PublicationRecord`]s. Every request goes through a
//! sliding-window rate limiter and is retried with exponential backoff on
//! HTTP 429, 5xx and transport errors.

use std::collections::VecDeque;
use std::time::{Duration, Instant};

use roxmltree::{Document, Node};

use super::{AuthorRecord, IngestError, PublicationRecord};

pub const API_KEY_ENV: &str = "SYNERGY_API_KEY";

#[derive(Clone, Debug)]
pub struct RemoteConfig {
    /// e.g. `https://eutils.ncbi.nlm.nih.gov/entrez/eutils`
    pub base_url: String,
    pub api_key: Option<String>,
    pub requests_per_second: usize,
    pub max_attempts: u32,
    pub initial_backoff: Duration,
    pub batch_size: usize,
    pub timeout: Duration,
}

impl RemoteConfig {
    pub fn new(base_url: impl Into<String>) -> Self {
        Self {
            base_url: base_url.into(),
            api_key: std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()),
            requests_per_second: 3,
            max_attempts: 3,
            initial_backoff: Duration::from_millis(500),
            batch_size: 200,
            timeout: Duration::from_secs(30),
        }
    }
}

/// Time source for the rate limiter and backoff; swapped out in tests.
pub trait Clock: Send {
    /// Time elapsed since an arbitrary fixed origin.
    fn now(&self) -> Duration;
    fn sleep(&mut self, d: Duration);
}

pub struct SystemClock {
    origin: Instant,
}

impl Default for SystemClock {
    fn default() -> Self {
        Self {
            origin: Instant::now(),
        }
    }
}

impl Clock for SystemClock {
    fn now(&self) -> Duration {
        self.origin.elapsed()
    }
    fn sleep(&mut self, d: Duration) {
        std::thread::sleep(d);
    }
}

/// At most `max_requests` in any half-open window of length `window`.
#[derive(Clone, Debug)]
pub struct RateLimiter {
    max_requests: usize,
    window: Duration,
    sent: VecDeque<Duration>,
}

impl RateLimiter {
    pub fn new(max_requests: usize, window: Duration) -> Self {
        Self {
            max_requests: max_requests.max(1),
            window,
            sent: VecDeque::new(),
        }
    }

    pub fn per_second(max_requests: usize) -> Self {
        Self::new(max_requests, Duration::from_secs(1))
    }

    /// Block (via `clock`) until a request may be sent, then record it.
    pub fn acquire(&mut self, clock: &mut dyn Clock) -> Duration {
        loop {
            let now = clock.now();
            while self
                .sent
                .front()
                .is_some_and(|&t| now.saturating_sub(t) >= self.window)
            {
                self.sent.pop_front();
            }
            if self.sent.len() < self.max_requests {
                self.sent.push_back(now);
                return now;
            }
            let oldest = self.sent[0];
            clock.sleep((oldest + self.window).saturating_sub(now).max(Duration::from_micros(1)));
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FetchResult {
    pub records: Vec<PublicationRecord>,
    /// Articles that could not be converted (e.g. no PMID).
    pub skipped: usize,
    /// HTTP requests issued, retries included.
    pub requests: usize,
}

pub struct RemoteClient {
    agent: ureq::Agent,
    config: RemoteConfig,
    limiter: RateLimiter,
    clock: Box<dyn Clock>,
    requests: usize,
}

impl RemoteClient {
    pub fn new(config: RemoteConfig) -> Self {
        Self::with_clock(config, Box::new(SystemClock::default()))
    }

    pub fn with_clock(config: RemoteConfig, clock: Box<dyn Clock>) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(config.timeout))
            .http_status_as_error(false)
            .build()
            .into();
        Self {
            agent,
            limiter: RateLimiter::per_second(config.requests_per_second),
            config,
            clock,
            requests: 0,
        }
    }

    pub fn requests_sent(&self) -> usize {
        self.requests
    }

    fn get(&mut self, endpoint: &str, params: &[(&str, String)]) -> Result<String, IngestError> {
        let url = format!("{}/{}", self.config.base_url.trim_end_matches('/'), endpoint);
        let attempts = self.config.max_attempts.max(1);
        let mut backoff = self.config.initial_backoff;
        for attempt in 1..=attempts {
            self.limiter.acquire(self.clock.as_mut());
            self.requests += 1;
            let mut req = self.agent.get(&url);
            for (k, v) in params {
                req = req.query(*k, v);
            }
            if let Some(key) = &self.config.api_key {
                req = req.query("api_key", key);
            }
            let failure = match req.call() {
                Ok(mut resp) => {
                    let status = resp.status().as_u16();
                    if status == 200 {
                        return resp
                            .body_mut()
                            .read_to_string()
                            .map_err(|e| IngestError::Network(e.to_string()));
                    }
                    match status {
                        429 => IngestError::RateLimited,
                        500..=599 => IngestError::HttpError(status),
                        _ => return Err(IngestError::HttpError(status)),
                    }
                }
                Err(ureq::Error::Timeout(_)) => IngestError::NetworkTimeout,
                Err(e) => IngestError::Network(e.to_string()),
            };
            if attempt == attempts {
                return Err(failure);
            }
            tracing::warn!(%url, attempt, error = %failure, "retrying after backoff");
            self.clock.sleep(backoff);
            backoff *= 2;
        }
        unreachable!("loop returns on the last attempt")
    }

    pub fn search(&mut self, query: &str, max_records: usize) -> Result<Vec<String>, IngestError> {
        if max_records == 0 {
            return Ok(Vec::new());
        }
        let body = self.get(
            "esearch.fcgi",
            &[
                ("db", "pubmed".into()),
                ("term", query.into()),
                ("retmax", max_records.to_string()),
            ],
        )?;
        let mut ids = parse_esearch(&body)?;
        ids.truncate(max_records);
        Ok(ids)
    }

    pub fn fetch(&mut self, ids: &[String]) -> Result<(Vec<PublicationRecord>, usize), IngestError> {
        let mut records = Vec::new();
        let mut skipped = 0;
        for batch in ids.chunks(self.config.batch_size.max(1)) {
            let body = self.get(
                "efetch.fcgi",
                &[
                    ("db", "pubmed".into()),
                    ("id", batch.join(",")),
                    ("retmode", "xml".into()),
                ],
            )?;
            let (recs, bad) = parse_efetch(&body)?;
            records.extend(recs);
            skipped += bad;
        }
        Ok((records, skipped))
    }
}

/// Search then fetch up to `max_records` records.
pub fn fetch_remote(
    query: &str,
    max_records: usize,
    config: RemoteConfig,
) -> Result<FetchResult, IngestError> {
    let mut client = RemoteClient::new(config);
    fetch_with(&mut client, query, max_records)
}

pub(crate) fn fetch_with(
    client: &mut RemoteClient,
    query: &str,
    max_records: usize,
) -> Result<FetchResult, IngestError> {
    let ids = client.search(query, max_records)?;
    let (records, skipped) = client.fetch(&ids)?;
    Ok(FetchResult {
        records,
        skipped,
        requests: client.requests_sent(),
    })
}

// E-utilities responses carry a DOCTYPE, which roxmltree rejects by default
fn parse_xml(xml: &str) -> Result<Document<'_>, IngestError> {
    let opts = roxmltree::ParsingOptions {
        allow_dtd: true,
        ..Default::default()
    };
    Document::parse_with_options(xml, opts).map_err(|e| IngestError::RemoteParse(e.to_string()))
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.has_tag_name(name))
}

fn descendant<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.descendants().find(|c| c.has_tag_name(name))
}

/// All text under `node`, including text inside inline markup (`<i>`, `<sup>`).
fn text_of(node: Node) -> String {
    let raw: String = node
        .descendants()
        .filter(|n| n.is_text())
        .filter_map(|n| n.text())
        .collect();
    raw.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn parse_esearch(xml: &str) -> Result<Vec<String>, IngestError> {
    let doc = parse_xml(xml)?;
    let root = doc.root_element();
    if let Some(err) = descendant(root, "ERROR") {
        return Err(IngestError::RemoteParse(text_of(err)));
    }
    Ok(descendant(root, "IdList")
        .map(|list| {
            list.children()
                .filter(|c| c.has_tag_name("Id"))
                .map(text_of)
                .filter(|id| !id.is_empty())
                .collect()
        })
        .unwrap_or_default())
}

/// Parse a `PubmedArticleSet`. Returns the converted records and the number of
/// articles skipped because they lack a PMID.
pub fn parse_efetch(xml: &str) -> Result<(Vec<PublicationRecord>, usize), IngestError> {
    let doc = parse_xml(xml)?;
    let mut records = Vec::new();
    let mut skipped = 0;
    for article in doc
        .root_element()
        .descendants()
        .filter(|n| n.has_tag_name("PubmedArticle"))
    {
        match parse_article(article) {
            Some(rec) => records.push(rec),
            None => skipped += 1,
        }
    }
    Ok((records, skipped))
}

fn parse_article(article: Node) -> Option<PublicationRecord> {
    let citation = descendant(article, "MedlineCitation")?;
    let pub_id = text_of(child(citation, "PMID")?);
    if pub_id.is_empty() {
        return None;
    }
    let art = child(citation, "Article");
    let title = art
        .and_then(|a| child(a, "ArticleTitle"))
        .map(text_of)
        .unwrap_or_default();
    let abstract_text = art
        .and_then(|a| child(a, "Abstract"))
        .map(|abs| {
            abs.children()
                .filter(|c| c.has_tag_name("AbstractText"))
                .map(text_of)
                .collect::<Vec<_>>()
                .join(" ")
        })
        .unwrap_or_default();
    let keywords = citation
        .children()
        .filter(|c| c.has_tag_name("KeywordList"))
        .flat_map(|kl| kl.children().filter(|c| c.has_tag_name("Keyword")))
        .map(text_of)
        .filter(|k| !k.is_empty())
        .collect();
    let year = art
        .and_then(|a| descendant(a, "PubDate"))
        .and_then(|d| {
            child(d, "Year")
                .map(text_of)
                .or_else(|| child(d, "MedlineDate").map(text_of))
        })
        .and_then(|s| s.get(..4).and_then(|y| y.parse().ok()));
    let authors = art
        .and_then(|a| child(a, "AuthorList"))
        .map(|list| {
            list.children()
                .filter(|c| c.has_tag_name("Author"))
                .filter_map(parse_author)
                .collect()
        })
        .unwrap_or_default();
    Some(PublicationRecord {
        pub_id,
        title,
        abstract_text,
        keywords,
        year,
        authors,
    })
}

fn parse_author(author: Node) -> Option<AuthorRecord> {
    let name = match child(author, "LastName").map(text_of) {
        Some(last) => {
            let first = child(author, "ForeName")
                .or_else(|| child(author, "Initials"))
                .map(text_of)
                .unwrap_or_default();
            format!("{first} {last}").trim().to_string()
        }
        None => child(author, "CollectiveName").map(text_of)?,
    };
    if name.is_empty() {
        return None;
    }
    let affiliation = author
        .children()
        .filter(|c| c.has_tag_name("AffiliationInfo"))
        .filter_map(|info| child(info, "Affiliation"))
        .map(text_of)
        .find(|a| !a.is_empty());
    Some(AuthorRecord { name, affiliation })
}
