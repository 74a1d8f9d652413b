//! Worked-example queries shared by unit tests.

pub const MANDELA: &str = "PREFIX dbr: <http://dbpedia.org/resource/>
PREFIX dbo: <http://dbpedia.org/ontology/>
SELECT ?birthDate WHERE {
  dbr:Nelson_Mandela dbo:birthDate ?birthDate }";

pub const PLATO: &str = "PREFIX dbr: <http://dbpedia.org/resource/>
PREFIX dbo: <http://dbpedia.org/ontology/>
SELECT ?influencer ?influencerDescription WHERE {
  dbr:Plato dbo:influencedBy ?influencer .
  ?influencer dbo:abstract ?influencerDescription
      FILTER (lang(?influencerDescription) = 'en') }";

pub const ISURI: &str = "SELECT * WHERE {
  ?subject ?predicate ?object FILTER isURI(?object) }";

pub const AUTHOR_CHAIN: &str = "PREFIX : <http://example.org/>
SELECT * WHERE {
  ?author a :Author .
  ?author :hasPublication ?publication .
  ?publication :inVenue ?venue }";

pub const DIRECTOR_STAR: &str = "PREFIX : <http://example.org/>
SELECT * WHERE {
  ?author a :Author .
  ?author :directorOf ?institution .
  ?author :hasPublication ?publication .
  ?publication :inVenue ?venue }";

pub const PARTY_CHAIN: &str = "PREFIX : <http://example.org/>
SELECT * WHERE {
  :party12 :hasMember ?author .
  ?author a :Author .
  ?author :hasPublication ?publication .
  ?publication :inVenue ?venue }";

pub const BIRTHDATE_FILTER: &str = "PREFIX : <http://example.org/>
SELECT * WHERE {
  ?author a :Author .
  ?author :directorOf ?institution .
  ?author :birthDate ?birthDate FILTER(year(?birthDate) > 1985)
  ?author :hasPublication ?publication .
  ?publication :inVenue ?venue }";

pub const BIRTHDATE_FILTER_AT_END: &str = "PREFIX : <http://example.org/>
SELECT * WHERE {
  ?author a :Author .
  ?author :directorOf ?institution .
  ?author :birthDate ?birthDate .
  ?author :hasPublication ?publication .
  ?publication :inVenue ?venue FILTER(year(?birthDate) > 1985) }";

pub const EX: &str = "http://example.org/";
